//! Engine dispatch and fitting over a range of component counts.

use crate::em::{run_em, EmConfig, EmResult};
use crate::error::{Error, Result};
use crate::gibbs::{run_chains, GibbsConfig, GibbsFit, PriorHyper, PriorSettings};
use crate::init::kmeans;
use crate::mixture::{map_labels, responsibilities, MixtureParams, Weighting};
use crate::numerics::DataMatrix;
use crate::seeds::{derive, roles, stream_id, substream};
use crate::selection::{select, Criterion, FitScore, RhoConvention};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Gibbs,
    Em,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Gibbs, Engine::Em];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Gibbs => "gibbs",
            Engine::Em => "em",
        }
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            Engine::Gibbs => 0,
            Engine::Em => 1,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gibbs" | "bayes" => Ok(Engine::Gibbs),
            "em" => Ok(Engine::Em),
            other => Err(Error::Config(format!("unknown engine `{other}` (expected `gibbs` or `em`)"))),
        }
    }
}

/// Settings shared by every fit in a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub em: EmConfig,
    pub gibbs: GibbsConfig,
    pub prior: PriorSettings,
    pub rho: RhoConvention,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        self.gibbs.validate()?;
        let p = &self.prior;
        if !(p.block_weight > 0.0 && p.block_weight.is_finite()) {
            return Err(Error::Config(format!("prior.block_weight must be positive, got {}", p.block_weight)));
        }
        if !(p.df_offset > 1.0 && p.df_offset.is_finite()) {
            return Err(Error::Config(format!("prior.df_offset must exceed 1, got {}", p.df_offset)));
        }
        if !(p.dirichlet > 0.0 && p.dirichlet.is_finite()) {
            return Err(Error::Config(format!("prior.dirichlet must be positive, got {}", p.dirichlet)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum FitDetail {
    Em(EmResult),
    Gibbs(Box<GibbsFit>),
}

/// A fitted `G`-component model from either engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub engine: Engine,
    pub g: usize,
    pub seed: u64,
    /// MLE (EM) or average of the retained draws (Gibbs).
    pub params: MixtureParams,
    /// Responsibilities at `params`.
    pub z: DataMatrix,
    pub labels: Vec<usize>,
    pub score: FitScore,
    pub converged: bool,
    pub detail: FitDetail,
}

/// Fits `g` components. EM starts from k-means and restarts from random
/// partitions on failure; the sampler runs its chains from independent
/// k-means starts.
pub fn fit_model(data: &DataMatrix, g: usize, engine: Engine, config: &FitConfig, seed: u64) -> Result<ModelFit> {
    if g == 0 || g >= data.nrows() {
        return Err(Error::Config(format!("cannot fit {g} components to {} observations", data.nrows())));
    }
    let (params, converged, detail) = match engine {
        Engine::Em => {
            let init = kmeans(data, g, &mut substream(seed, stream_id(roles::KMEANS, 0)))?;
            let r = run_em(data, g, &init, &config.em, seed)?;
            (r.params.clone(), r.converged, FitDetail::Em(r))
        }
        Engine::Gibbs => {
            let prior = PriorHyper::from_settings(data, g, &config.prior)?;
            let r = run_chains(data, g, &prior, &config.gibbs, seed)?;
            (r.estimate.clone(), r.converged, FitDetail::Gibbs(Box::new(r)))
        }
    };
    let (z, loglik) = responsibilities(data, &params, Weighting::Marginal)?;
    let score = FitScore::new(loglik, &z, config.rho, data.ncols());
    Ok(ModelFit {
        engine,
        g,
        seed,
        labels: map_labels(&z),
        params,
        z,
        score,
        converged,
        detail,
    })
}

/// Outcome for one `G`: a fit or the reason it failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeEntry {
    pub g: usize,
    pub fit: Option<ModelFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeFit {
    pub engine: Engine,
    pub entries: Vec<RangeEntry>,
    pub best_bic: Option<usize>,
    pub best_icl: Option<usize>,
    /// Components added beyond the requested range.
    pub extended_by: usize,
}

impl RangeFit {
    pub fn fit_for(&self, g: usize) -> Option<&ModelFit> {
        self.entries.iter().find(|e| e.g == g).and_then(|e| e.fit.as_ref())
    }

    pub fn scores(&self) -> Vec<FitScore> {
        self.entries.iter().filter_map(|e| e.fit.as_ref().map(|f| f.score.clone())).collect()
    }

    pub fn selected(&self, criterion: Criterion) -> Option<&ModelFit> {
        let g = match criterion {
            Criterion::Bic => self.best_bic,
            Criterion::Icl => self.best_icl,
        }?;
        self.fit_for(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeOptions {
    /// Keep adding a component while either criterion picks the largest `G`.
    pub extend: bool,
    pub max_extra: usize,
}

impl Default for RangeOptions {
    fn default() -> Self {
        Self {
            extend: true,
            max_extra: 3,
        }
    }
}

fn fit_entry(data: &DataMatrix, g: usize, engine: Engine, config: &FitConfig, seed: u64) -> Result<RangeEntry> {
    let fit_seed = derive(seed, stream_id(roles::FIT, g as u64));
    match fit_model(data, g, engine, config, fit_seed) {
        Ok(fit) => Ok(RangeEntry {
            g,
            fit: Some(fit),
            error: None,
        }),
        Err(e @ Error::Config(_)) => Err(e),
        Err(e) => Ok(RangeEntry {
            g,
            fit: None,
            error: Some(e.to_string()),
        }),
    }
}

/// Fits every `G` in `range`; failed fits are recorded, not fatal. Each `G`
/// draws from its own child seed, so the result does not depend on the
/// range or on scheduling.
pub fn fit_range(
    data: &DataMatrix,
    range: RangeInclusive<usize>,
    engine: Engine,
    config: &FitConfig,
    seed: u64,
    options: &RangeOptions,
) -> Result<RangeFit> {
    if *range.start() == 0 || range.is_empty() {
        return Err(Error::Config(format!("invalid component range {}:{}", range.start(), range.end())));
    }
    config.validate()?;
    let mut entries = range
        .clone()
        .into_par_iter()
        .map(|g| fit_entry(data, g, engine, config, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut out = RangeFit {
        engine,
        entries: Vec::new(),
        best_bic: None,
        best_icl: None,
        extended_by: 0,
    };
    loop {
        out.entries = std::mem::take(&mut entries);
        let scores = out.scores();
        out.best_bic = select(&scores, Criterion::Bic).map(|i| scores[i].g);
        out.best_icl = select(&scores, Criterion::Icl).map(|i| scores[i].g);
        let top = out.entries.last().map_or(0, |e| e.g);
        let on_bound = out.best_bic == Some(top) || out.best_icl == Some(top);
        if !(options.extend && on_bound && out.extended_by < options.max_extra && top + 1 < data.nrows()) {
            return Ok(out);
        }
        entries = std::mem::take(&mut out.entries);
        entries.push(fit_entry(data, top + 1, engine, config, seed)?);
        out.extended_by += 1;
    }
}
