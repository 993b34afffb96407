//! EM fitting with the set-back safeguard against the unbounded likelihood.
//!
//! The M-step is the zero-hyperparameter limit of the conjugate posterior
//! means in [`crate::gibbs`], so both engines share one set of formulas.
//! Once a location estimate comes within `setback_threshold` (largest
//! coordinate difference) of an observation, that location reverts to its
//! previous value and stays fixed; the skewness then follows the conditional
//! maximiser given the fixed location.

use crate::distributions::SalParams;
use crate::error::{Error, Result};
use crate::gibbs::{update_hypers, ComponentPrior};
use crate::init::{params_from_partition, random_partition};
use crate::mixture::{accumulate_stats_from_moments, responsibilities, MixtureParams, ScaleMoments, SufficientStats, Weighting};
use crate::numerics::{symmetrize, DataMatrix, SpdMatrix};
use crate::seeds::{roles, stream_id, substream};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Components whose total responsibility falls below this are empty.
const EMPTY_MASS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iters: usize,
    pub aitken_eps: f64,
    pub setback_threshold: f64,
    pub restarts_on_failure: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            aitken_eps: 0.01,
            setback_threshold: 1e-6,
            restarts_on_failure: 10,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("em.max_iters must be positive".into()));
        }
        if !(self.aitken_eps > 0.0) {
            return Err(Error::Config(format!("em.aitken_eps must be positive, got {}", self.aitken_eps)));
        }
        if !(self.setback_threshold > 0.0) {
            return Err(Error::Config(format!(
                "em.setback_threshold must be positive, got {}",
                self.setback_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub params: MixtureParams,
    /// Observed-data log-likelihood of the parameters entering each E-step;
    /// the last entry belongs to `params`.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub setback_engaged: Vec<bool>,
    /// Index into `loglik_trace` of the E-step after which set-back first
    /// engaged.
    pub setback_iteration: Option<usize>,
    pub final_z: DataMatrix,
    /// Random-partition restarts used before this run succeeded.
    pub restarts: usize,
}

impl EmResult {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace is never empty")
    }
}

/// Responsibilities, `E[W | x]` and `E[1/W | x]` for every observation and
/// component, plus the observed-data log-likelihood of `params`.
pub fn e_step(data: &DataMatrix, params: &MixtureParams) -> Result<(ScaleMoments, f64)> {
    let (z, loglik) = responsibilities(data, params, Weighting::Marginal)?;
    let (n, g) = (data.nrows(), params.g());
    let mut a = DataMatrix::zeros(n, g);
    let mut b = DataMatrix::zeros(n, g);
    for (k, comp) in params.components().iter().enumerate() {
        let kernel = comp.kernel();
        for (i, x) in data.rows().enumerate() {
            let unbounded = |e: Error| match e {
                Error::UnboundedDensity => Error::UnboundedLikelihood { row: i, component: k },
                other => other,
            };
            let gig = kernel.conditional_scale(x).map_err(unbounded)?;
            a.row_mut(i)[k] = gig.mean()?;
            b.row_mut(i)[k] = gig.mean_inverse()?;
        }
    }
    Ok((ScaleMoments { z, a, b }, loglik))
}

/// Maximum-likelihood update from E-step expectations.
pub fn m_step(data: &DataMatrix, moments: &ScaleMoments) -> Result<MixtureParams> {
    m_step_with_fixed(data, moments, &vec![None; moments.z.ncols()])
}

fn m_step_with_fixed(data: &DataMatrix, moments: &ScaleMoments, fixed: &[Option<Vec<f64>>]) -> Result<MixtureParams> {
    let stats = accumulate_stats_from_moments(data, moments);
    let mut weights = Vec::with_capacity(stats.len());
    let mut components = Vec::with_capacity(stats.len());
    for (k, s) in stats.iter().enumerate() {
        if !(s.t0 > EMPTY_MASS) {
            return Err(Error::EmptyComponent { component: k });
        }
        weights.push(s.t0 / data.nrows() as f64);
        components.push(match &fixed[k] {
            None => free_update(s, k)?,
            Some(mu) => fixed_location_update(s, mu, k)?,
        });
    }
    MixtureParams::normalized(weights, components)
}

fn free_update(stats: &SufficientStats, k: usize) -> Result<SalParams> {
    let degenerate = |_| Error::DegenerateComponent { component: k };
    let post = update_hypers(&ComponentPrior::flat(stats.dim()), stats, k).map_err(degenerate)?;
    let sigma = post.sigma_hat().map_err(degenerate)?;
    SalParams::new(post.mu0, post.alpha0, sigma)
}

/// With `μ` held fixed: `α = Σ z (x - μ) / Σ z w` and the matching
/// covariance update.
fn fixed_location_update(s: &SufficientStats, mu: &[f64], k: usize) -> Result<SalParams> {
    let p = mu.len();
    let sum_w = 2.0 * s.t3;
    if !(sum_w > 0.0) {
        return Err(Error::DegenerateComponent { component: k });
    }
    let centred: Vec<f64> = (0..p).map(|j| s.t1[j] - s.t0 * mu[j]).collect();
    let alpha: Vec<f64> = centred.iter().map(|c| c / sum_w).collect();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        for l in 0..p {
            // Σ z/w (x-μ)(x-μ)ᵀ - α cᵀ - c αᵀ + Σ z w ααᵀ
            let scatter = 2.0 * s.t5[j * p + l] - mu[j] * s.t2[l] - s.t2[j] * mu[l] + 2.0 * s.t4 * mu[j] * mu[l];
            m[(j, l)] = (scatter - alpha[j] * centred[l] - centred[j] * alpha[l] + sum_w * alpha[j] * alpha[l]) / s.t0;
        }
    }
    let sigma = SpdMatrix::new(symmetrize(&m)).map_err(|_| Error::DegenerateComponent { component: k })?;
    SalParams::new(mu.to_vec(), alpha, sigma)
}

/// Aitken-accelerated stopping rule on the last three log-likelihoods: with
/// `a = (l₂ - l₁)/(l₁ - l₀)` and asymptotic estimate
/// `l∞ = l₁ + (l₂ - l₁)/(1 - a)`, stop once `|l∞ - l₂| < eps`. Traces that do
/// not contract (`a ≥ 1`) never stop.
pub fn aitken_converged(trace: &[f64], eps: f64) -> bool {
    let k = trace.len();
    if k < 3 {
        return false;
    }
    let (l0, l1, l2) = (trace[k - 3], trace[k - 2], trace[k - 1]);
    let (d1, d2) = (l1 - l0, l2 - l1);
    if d1 == 0.0 {
        return d2 == 0.0;
    }
    let a = d2 / d1;
    if !(a < 1.0) || !a.is_finite() {
        return false;
    }
    let l_inf = l1 + d2 / (1.0 - a);
    (l_inf - l2).abs() < eps
}

/// `min_i max_j |x_ij - μ_j|`
pub fn setback_distance(data: &DataMatrix, mu: &[f64]) -> f64 {
    data.rows()
        .map(|x| x.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Iterates from given starting parameters; no restarts.
pub fn run_em_from_params(data: &DataMatrix, start: MixtureParams, config: &EmConfig) -> Result<EmResult> {
    config.validate()?;
    let g = start.g();
    let mut fixed: Vec<Option<Vec<f64>>> = vec![None; g];
    let mut setback_iteration = None;
    let mut trace = Vec::new();
    let mut params = start;
    let mut converged = false;
    let mut final_z = None;
    for _ in 0..config.max_iters {
        let (moments, loglik) = e_step(data, &params)?;
        trace.push(loglik);
        if aitken_converged(&trace, config.aitken_eps) {
            converged = true;
            final_z = Some(moments.z);
            break;
        }
        let mut next = m_step_with_fixed(data, &moments, &fixed)?;
        let mut engaged = false;
        for k in 0..g {
            if fixed[k].is_none() && setback_distance(data, next.component(k).mu()) < config.setback_threshold {
                fixed[k] = Some(params.component(k).mu().to_vec());
                engaged = true;
            }
        }
        if engaged {
            setback_iteration.get_or_insert(trace.len() - 1);
            next = m_step_with_fixed(data, &moments, &fixed)?;
        }
        params = next;
    }
    let final_z = match final_z {
        Some(z) => z,
        None => {
            let (moments, loglik) = e_step(data, &params)?;
            trace.push(loglik);
            moments.z
        }
    };
    Ok(EmResult {
        params,
        loglik_trace: trace,
        converged,
        setback_engaged: fixed.iter().map(Option::is_some).collect(),
        setback_iteration,
        final_z,
        restarts: 0,
    })
}

fn restartable(e: &Error) -> bool {
    matches!(
        e,
        Error::UnboundedLikelihood { .. }
            | Error::DegenerateComponent { .. }
            | Error::EmptyComponent { .. }
            | Error::NonFiniteRow { .. }
    )
}

/// EM from an initial hard partition. Numerical failures (unbounded
/// likelihood, degenerate or empty components) and runs that exhaust
/// `max_iters` restart from a fresh random partition drawn from `seed`, up
/// to `config.restarts_on_failure` times. If every attempt stops without
/// converging, the last of them is returned with `converged = false`.
pub fn run_em(data: &DataMatrix, g: usize, init: &[usize], config: &EmConfig, seed: u64) -> Result<EmResult> {
    config.validate()?;
    let mut labels = init.to_vec();
    let mut unconverged = None;
    for attempt in 0..=config.restarts_on_failure {
        if attempt > 0 {
            let mut rng = substream(seed, stream_id(roles::EM_RESTART, attempt as u64));
            labels = random_partition(data.nrows(), g, &mut rng)?;
        }
        match params_from_partition(data, &labels, g).and_then(|start| run_em_from_params(data, start, config)) {
            Ok(mut r) => {
                r.restarts = attempt;
                if r.converged {
                    return Ok(r);
                }
                unconverged = Some(r);
            }
            Err(e) if restartable(&e) => {
                if attempt == config.restarts_on_failure && unconverged.is_none() {
                    return Err(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(unconverged.expect("loop either returned or stored a result"))
}
