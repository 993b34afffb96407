//! Independent chains from k-means starts, monitored by the PSRF of their
//! log-likelihood traces.

use super::posterior::PriorHyper;
use super::sampler::{gibbs_sweep, GibbsState, SweepConfig};
use crate::diagnostics::{
    average_params, psrf, relabel, relabel_to_reference, summarize, PosteriorSummary, PsrfReport, RelabelMethod, PSRF_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::init::kmeans;
use crate::mixture::{responsibilities, MixtureParams, Weighting};
use crate::numerics::DataMatrix;
use crate::seeds::{roles, stream_id, substream, StreamRng};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    pub n_chains: usize,
    pub max_sweeps: usize,
    /// Sweeps before the first convergence check.
    pub min_sweeps: usize,
    pub check_every: usize,
    pub burn_in_fraction: f64,
    pub psrf_threshold: f64,
    /// Draws pooled across chains for the point estimates.
    pub n_retained: usize,
    pub sweep: SweepConfig,
    /// Consecutive empty sweeps after which a component is flagged.
    pub empty_patience: usize,
    pub relabel: RelabelMethod,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            n_chains: 3,
            max_sweeps: 10_000,
            min_sweeps: 1_000,
            check_every: 250,
            burn_in_fraction: 0.5,
            psrf_threshold: PSRF_THRESHOLD,
            n_retained: 500,
            sweep: SweepConfig::default(),
            empty_patience: 50,
            relabel: RelabelMethod::default(),
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_chains < 2 {
            return bad(format!("gibbs.n_chains must be at least 2 for the PSRF, got {}", self.n_chains));
        }
        if self.max_sweeps == 0 || self.min_sweeps == 0 || self.check_every == 0 {
            return bad("gibbs.max_sweeps, gibbs.min_sweeps and gibbs.check_every must be positive".into());
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return bad(format!("gibbs.burn_in_fraction must lie in [0, 1), got {}", self.burn_in_fraction));
        }
        if !(self.psrf_threshold > 1.0) {
            return bad(format!("gibbs.psrf_threshold must exceed 1, got {}", self.psrf_threshold));
        }
        let first = self.min_sweeps.min(self.max_sweeps);
        let kept = first - self.burn_in(first);
        if kept < 10 || kept * self.n_chains < self.n_retained || self.n_retained < 2 {
            return bad(format!(
                "gibbs budget too small: {kept} post-burn-in sweeps per chain cannot supply {} retained draws",
                self.n_retained
            ));
        }
        if !(self.sweep.guard_eps > 0.0) {
            return bad("gibbs.sweep.guard_eps must be positive".into());
        }
        Ok(())
    }

    fn burn_in(&self, sweeps: usize) -> usize {
        (sweeps as f64 * self.burn_in_fraction).floor() as usize
    }
}

/// One chain: every sweep's parameters, log-likelihood and hard labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    pub seed: u64,
    pub stream: u64,
    pub draws: Vec<MixtureParams>,
    pub loglik: Vec<f64>,
    pub labels: Vec<Vec<u16>>,
    /// Guard-forced redraws per sweep.
    pub resamples: Vec<u32>,
    /// Longest run of consecutive empty sweeps per component.
    pub longest_empty_run: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsFit {
    pub g: usize,
    pub chains: Vec<ChainRun>,
    pub sweeps: usize,
    pub psrf: PsrfReport,
    pub converged: bool,
    /// Pooled draws after burn-in on a common labelling.
    pub retained: Vec<MixtureParams>,
    /// Average of `retained`.
    pub estimate: MixtureParams,
    pub summary: PosteriorSummary,
    /// Marginal responsibilities at `estimate`.
    pub z: DataMatrix,
    pub loglik: f64,
    pub persistent_empty: Vec<bool>,
}

struct Chain {
    state: GibbsState,
    rng: StreamRng,
    run: ChainRun,
    empty_run: Vec<usize>,
}

impl Chain {
    fn start(data: &DataMatrix, g: usize, config: &SweepConfig, seed: u64, index: u64) -> Result<Self> {
        let labels = kmeans(data, g, &mut substream(seed, stream_id(roles::KMEANS, index)))?;
        let stream = stream_id(roles::CHAIN, index);
        let mut rng = substream(seed, stream);
        let state = GibbsState::from_partition(data, &labels, g, config, &mut rng)?;
        Ok(Self {
            state,
            rng,
            run: ChainRun {
                seed,
                stream,
                draws: Vec::new(),
                loglik: Vec::new(),
                labels: Vec::new(),
                resamples: Vec::new(),
                longest_empty_run: vec![0; g],
            },
            empty_run: vec![0; g],
        })
    }

    fn advance(&mut self, data: &DataMatrix, prior: &PriorHyper, config: &SweepConfig, until: usize) -> Result<()> {
        while self.run.draws.len() < until {
            let report = gibbs_sweep(&mut self.state, data, prior, config, &mut self.rng)?;
            for (k, &c) in report.counts.iter().enumerate() {
                self.empty_run[k] = if c == 0 { self.empty_run[k] + 1 } else { 0 };
                self.run.longest_empty_run[k] = self.run.longest_empty_run[k].max(self.empty_run[k]);
            }
            self.run.loglik.push(self.state.params.log_likelihood(data)?);
            self.run.labels.push(self.state.labels.iter().map(|&l| l as u16).collect());
            self.run.resamples.push(report.resamples as u32);
            self.run.draws.push(self.state.params.clone());
        }
        Ok(())
    }
}

/// `total` split as evenly as possible over `parts`, larger shares first.
fn split_counts(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|c| total / parts + usize::from(c < total % parts)).collect()
}

/// Runs the chains in lockstep blocks until the PSRF of the post-burn-in
/// log-likelihood traces drops below the threshold or the sweep budget is
/// spent, then pools `n_retained` evenly spaced post-burn-in draws.
pub fn run_chains(data: &DataMatrix, g: usize, prior: &PriorHyper, config: &GibbsConfig, seed: u64) -> Result<GibbsFit> {
    config.validate()?;
    prior.validate()?;
    if g > u16::MAX as usize || prior.g() != g {
        return Err(Error::Config(format!("prior has {} components, fit asks for {g}", prior.g())));
    }
    let mut chains = (0..config.n_chains as u64)
        .map(|c| Chain::start(data, g, &config.sweep, seed, c))
        .collect::<Result<Vec<_>>>()?;

    let mut sweeps = 0;
    let report = loop {
        sweeps = if sweeps == 0 {
            config.min_sweeps.min(config.max_sweeps)
        } else {
            (sweeps + config.check_every).min(config.max_sweeps)
        };
        for chain in &mut chains {
            chain.advance(data, prior, &config.sweep, sweeps)?;
        }
        let burn = config.burn_in(sweeps);
        let traces: Vec<&[f64]> = chains.iter().map(|c| &c.run.loglik[burn..sweeps]).collect();
        let mut report = psrf(&traces)?;
        report.converged = report.rhat < config.psrf_threshold;
        if report.converged || sweeps >= config.max_sweeps {
            break report;
        }
    };

    let burn = config.burn_in(sweeps);
    let kept = sweeps - burn;
    let mut pooled = Vec::with_capacity(config.n_retained);
    for (chain, count) in chains.iter().zip(split_counts(config.n_retained, config.n_chains)) {
        for j in 0..count {
            pooled.push(chain.run.draws[burn + j * kept / count].clone());
        }
    }
    let retained = match config.relabel {
        RelabelMethod::WeightOrder => relabel(&pooled),
        RelabelMethod::Reference => relabel_to_reference(&pooled)?,
    };
    let estimate = average_params(&retained)?;
    let summary = summarize(&retained)?;
    let (z, loglik) = responsibilities(data, &estimate, Weighting::Marginal)?;
    let persistent_empty = (0..g)
        .map(|k| chains.iter().any(|c| c.run.longest_empty_run[k] > config.empty_patience))
        .collect();
    Ok(GibbsFit {
        g,
        chains: chains.into_iter().map(|c| c.run).collect(),
        sweeps,
        converged: report.converged,
        psrf: report,
        retained,
        estimate,
        summary,
        z,
        loglik,
        persistent_empty,
    })
}
