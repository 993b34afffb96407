//! One sweep of the data-augmentation sampler.

use super::posterior::{draw_component_params, update_hypers, PriorHyper};
use crate::distributions::{dirichlet_sample, SalParams};
use crate::error::{Error, Result};
use crate::init::params_from_partition;
use crate::mixture::{accumulate_stats_hard, responsibilities, MixtureParams, Weighting};
use crate::numerics::DataMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Smallest admissible `δ(x_i, μ_g | Σ_g)` for a drawn component.
    pub guard_eps: f64,
    pub max_resample: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            guard_eps: 1e-6,
            max_resample: 100,
        }
    }
}

/// Current parameters, latent scales (`n × G`) and hard labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsState {
    pub params: MixtureParams,
    pub w: DataMatrix,
    pub labels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    /// Component redraws forced by the distance guard.
    pub resamples: usize,
    pub counts: Vec<usize>,
}

/// Scales from their GIG conditionals, with `δ` floored at `min_delta`. The
/// guard keeps sampled locations at least `guard_eps` away from every row,
/// so the floor only binds for starting values (a singleton cluster puts its
/// mean on an observation).
fn draw_scales<R: Rng + ?Sized>(data: &DataMatrix, params: &MixtureParams, w: &mut DataMatrix, min_delta: f64, rng: &mut R) -> Result<()> {
    for (k, comp) in params.components().iter().enumerate() {
        let kernel = comp.kernel();
        for (i, x) in data.rows().enumerate() {
            let delta = kernel.distance_terms(x).0.max(min_delta);
            let gig = kernel.conditional_scale_from_distance(delta).map_err(|e| match e {
                Error::UnboundedDensity => Error::UnboundedLikelihood { row: i, component: k },
                other => other,
            })?;
            w.row_mut(i)[k] = gig.sample(rng);
        }
    }
    Ok(())
}

fn min_distance(data: &DataMatrix, comp: &SalParams) -> f64 {
    let kernel = comp.kernel();
    data.rows().map(|x| kernel.distance_terms(x).0).fold(f64::INFINITY, f64::min)
}

impl GibbsState {
    /// Parameters from a hard partition (cluster means, covariances and
    /// proportions with skewness `0.05·1`) and scales drawn from their
    /// conditional law at those parameters.
    pub fn from_partition<R: Rng + ?Sized>(data: &DataMatrix, labels: &[usize], g: usize, config: &SweepConfig, rng: &mut R) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() != labels.len() {
            return Err(Error::Shape {
                expected: data.nrows(),
                found: labels.len(),
            });
        }
        let params = params_from_partition(data, labels, g)?;
        let mut w = DataMatrix::zeros(data.nrows(), g);
        draw_scales(data, &params, &mut w, config.guard_eps, rng)?;
        Ok(Self {
            params,
            w,
            labels: labels.to_vec(),
        })
    }
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    // rounding left u just above the total
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Labels, then scales, then component parameters (redrawn while any
/// observation sits within `guard_eps` of a location), then weights.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut GibbsState,
    data: &DataMatrix,
    prior: &PriorHyper,
    config: &SweepConfig,
    rng: &mut R,
) -> Result<SweepReport> {
    let g = state.params.g();
    if prior.g() != g {
        return Err(Error::Shape {
            expected: g,
            found: prior.g(),
        });
    }
    if g > 1 {
        let (z, _) = responsibilities(data, &state.params, Weighting::GivenScales(&state.w))?;
        for (i, row) in z.rows().enumerate() {
            state.labels[i] = categorical(row, rng);
        }
    }

    draw_scales(data, &state.params, &mut state.w, config.guard_eps, rng)?;

    let stats = accumulate_stats_hard(data, &state.labels, &state.w, g);
    let mut components = Vec::with_capacity(g);
    let mut resamples = 0;
    for (k, s) in stats.iter().enumerate() {
        let post = update_hypers(&prior.components[k], s, k)?;
        let mut comp = draw_component_params(&post, rng)?;
        let mut attempts = 0;
        while min_distance(data, &comp) < config.guard_eps {
            attempts += 1;
            if attempts > config.max_resample {
                return Err(Error::DegenerateDraw {
                    component: k,
                    attempts: config.max_resample,
                });
            }
            comp = draw_component_params(&post, rng)?;
        }
        resamples += attempts;
        components.push(comp);
    }

    let mut counts = vec![0usize; g];
    state.labels.iter().for_each(|&l| counts[l] += 1);
    let conc: Vec<f64> = prior.dirichlet.iter().zip(&counts).map(|(a, &c)| a + c as f64).collect();
    let mut weights = dirichlet_sample(&conc, rng)?;
    if weights.contains(&0.0) {
        weights.iter_mut().for_each(|w| *w = w.max(f64::MIN_POSITIVE));
    }
    state.params = MixtureParams::normalized(weights, components)?;
    Ok(SweepReport { resamples, counts })
}
