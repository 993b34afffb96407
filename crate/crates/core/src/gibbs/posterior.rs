//! Conjugate prior and posterior algebra for one SAL component.
//!
//! Hyperparameters mirror the sufficient statistics: `a_j = a_j⁰ + t_j`.
//! Writing `Λ = Σ⁻¹`, the posterior kernel is
//! `|Λ|^((df⁰ + t0 - p + 1)/2) exp(-tr(Λ C(μ, α)))` with `C` quadratic in
//! `(μ, α)`. Completing the square gives a Gaussian for `(μ, α) | Λ` with
//! precision `T ⊗ Λ`, `T = [[2 a4, a0], [a0, 2 a3]]`, and a Wishart marginal
//! for `Λ` with `df⁰ + t0` degrees of freedom and inverse scale `2 V0⁻¹`.
//!
//! The prior degrees of freedom `df⁰` are kept separate from `a0⁰`, which
//! only weights the location/skewness block; tying the two forces the prior
//! on `(μ, α)` to carry as many pseudo-observations as the Wishart needs to
//! be proper.

use crate::distributions::{lower_times, standard_normal, wishart_sample_inv_scale, SalParams};
use crate::error::{Error, Result};
use crate::mixture::SufficientStats;
use crate::numerics::{symmetrize, DataMatrix, SpdMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Prior hyperparameters of one component. `a5` is the prior scale about the
/// prior means; the prior on `Λ` is Wishart with `df` degrees of freedom and
/// inverse scale `2 a5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentPrior {
    pub df: f64,
    pub a0: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: f64,
    pub a4: f64,
    /// Row-major `p × p`.
    pub a5: Vec<f64>,
}

/// Hyperparameters for a `G`-component mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorHyper {
    pub components: Vec<ComponentPrior>,
    pub dirichlet: Vec<f64>,
}

/// `a4 μμᵀ + ½ a0 (μαᵀ + αμᵀ) + a3 ααᵀ`, row-major.
fn q_matrix(mu: &[f64], alpha: &[f64], a0: f64, a3: f64, a4: f64) -> Vec<f64> {
    let p = mu.len();
    let mut q = vec![0.0; p * p];
    for j in 0..p {
        for k in 0..p {
            q[j * p + k] = a4 * mu[j] * mu[k] + 0.5 * a0 * (mu[j] * alpha[k] + alpha[j] * mu[k]) + a3 * alpha[j] * alpha[k];
        }
    }
    q
}

/// Solves the 2×2 block system for the means: returns `(μ0, α0, D)` with
/// `D = 4 a3 a4 - a0²`.
fn block_means(a0: f64, a1: &[f64], a2: &[f64], a3: f64, a4: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let d = 4.0 * a3 * a4 - a0 * a0;
    let mu = a1.iter().zip(a2).map(|(x1, x2)| (2.0 * a3 * x2 - a0 * x1) / d).collect();
    let alpha = a1.iter().zip(a2).map(|(x1, x2)| (2.0 * a4 * x1 - a0 * x2) / d).collect();
    (mu, alpha, d)
}

impl ComponentPrior {
    /// All-zero hyperparameters. Improper on its own; used for the
    /// likelihood-only limit that defines the EM M-step.
    pub fn flat(p: usize) -> Self {
        Self {
            df: 0.0,
            a0: 0.0,
            a1: vec![0.0; p],
            a2: vec![0.0; p],
            a3: 0.0,
            a4: 0.0,
            a5: vec![0.0; p * p],
        }
    }

    /// Prior centred at `(μ, α) = (mu0, alpha0)` with weight `a0 = a3 = a4`
    /// on the location/skewness block, `df` Wishart degrees of freedom, and
    /// prior mean of `Σ` equal to `sigma0`.
    pub fn centered(mu0: &[f64], alpha0: &[f64], a0: f64, df: f64, sigma0: &[f64]) -> Result<Self> {
        let p = mu0.len();
        if !(df > p as f64 + 1.0) {
            return Err(Error::Config(format!(
                "prior degrees of freedom {df} must exceed p + 1 = {} for the prior mean of Σ to exist",
                p + 1
            )));
        }
        let (a3, a4) = (a0, a0);
        // stationarity of the prior kernel: a1 = a0 μ + 2 a3 α, a2 = a0 α + 2 a4 μ
        let a1 = mu0.iter().zip(alpha0).map(|(m, a)| a0 * m + 2.0 * a3 * a).collect();
        let a2 = mu0.iter().zip(alpha0).map(|(m, a)| a0 * a + 2.0 * a4 * m).collect();
        // E[Σ] under Wishart(df, (2 a5)⁻¹) on Λ is 2 a5 / (df - p - 1)
        let a5 = sigma0.iter().map(|s| s * 0.5 * (df - p as f64 - 1.0)).collect();
        let prior = Self { df, a0, a1, a2, a3, a4, a5 };
        prior.validate()?;
        Ok(prior)
    }

    pub fn dim(&self) -> usize {
        self.a1.len()
    }

    fn is_flat(&self) -> bool {
        self.df == 0.0 && self.a0 == 0.0 && self.a3 == 0.0 && self.a4 == 0.0
    }

    /// A proper prior needs `4 a3 a4 > a0²`, an SPD `a5` and `df > p - 1`.
    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.a2.len() != p || self.a5.len() != p * p {
            return Err(Error::Config("prior hyperparameter shapes disagree".into()));
        }
        if self.is_flat() {
            return Ok(());
        }
        if !(self.df > p as f64 - 1.0) || !(self.a0 >= 0.0) || !(self.a3 > 0.0) || !(self.a4 > 0.0) {
            return Err(Error::Config(format!(
                "prior needs df > p - 1, a0 >= 0, a3 > 0, a4 > 0 (got df={}, a0={}, a3={}, a4={})",
                self.df, self.a0, self.a3, self.a4
            )));
        }
        if !(4.0 * self.a3 * self.a4 - self.a0 * self.a0 > 0.0) {
            return Err(Error::Config(format!(
                "prior location/skewness block is not positive definite: 4 a3 a4 - a0² = {}",
                4.0 * self.a3 * self.a4 - self.a0 * self.a0
            )));
        }
        SpdMatrix::from_row_slice(p, &self.a5)
            .map_err(|e| Error::Config(format!("prior scale a5 is invalid: {e}")))?;
        Ok(())
    }

    /// `Q` evaluated at the prior means; zero for the flat prior.
    fn q_at_means(&self) -> Vec<f64> {
        if self.is_flat() {
            return vec![0.0; self.dim() * self.dim()];
        }
        let (mu, alpha, _) = block_means(self.a0, &self.a1, &self.a2, self.a3, self.a4);
        q_matrix(&mu, &alpha, self.a0, self.a3, self.a4)
    }
}

/// Knobs of the data-scaled default prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSettings {
    /// `a0 = a3 = a4`, the pseudo-observation weight on `(μ, α)`.
    pub block_weight: f64,
    /// Wishart degrees of freedom minus `p`.
    pub df_offset: f64,
    pub dirichlet: f64,
    /// Divide the sample covariance by `G^(2/p)` for the prior mean of `Σ`.
    pub shrink_scale: bool,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self {
            block_weight: 0.01,
            df_offset: 2.0,
            dirichlet: 1.0,
            shrink_scale: true,
        }
    }
}

impl PriorHyper {
    /// Default prior: for every component prior means `μ = x̄` and `α = 0`
    /// with block weight 0.01, `df = p + 2`, prior mean of `Σ` equal to the
    /// sample covariance divided by `G^(2/p)`, and unit Dirichlet
    /// concentrations.
    pub fn default_for(data: &DataMatrix, g: usize) -> Result<Self> {
        Self::from_settings(data, g, &PriorSettings::default())
    }

    pub fn from_settings(data: &DataMatrix, g: usize, settings: &PriorSettings) -> Result<Self> {
        let p = data.ncols();
        let xbar = data.column_means();
        let shrink = if settings.shrink_scale { (g as f64).powf(2.0 / p as f64) } else { 1.0 };
        let sigma0: Vec<f64> = data.covariance().iter().map(|c| c / shrink).collect();
        let comp = ComponentPrior::centered(&xbar, &vec![0.0; p], settings.block_weight, p as f64 + settings.df_offset, &sigma0)?;
        if !(settings.dirichlet > 0.0) {
            return Err(Error::Config(format!("Dirichlet concentration must be positive, got {}", settings.dirichlet)));
        }
        Ok(Self {
            components: vec![comp; g],
            dirichlet: vec![settings.dirichlet; g],
        })
    }

    pub fn g(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.dirichlet.len() != self.components.len() {
            return Err(Error::Config("prior must have one Dirichlet concentration per component".into()));
        }
        if self.dirichlet.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        for c in &self.components {
            c.validate()?;
        }
        Ok(())
    }
}

/// Posterior hyperparameters of one component plus the derived block means,
/// precision weights and Wishart inverse scale.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorHyper {
    /// Wishart degrees of freedom, `df⁰ + t0`.
    pub df: f64,
    pub a0: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: f64,
    pub a4: f64,
    /// `a5⁰ + t5`, row-major.
    pub a5: Vec<f64>,
    pub mu0: Vec<f64>,
    pub alpha0: Vec<f64>,
    /// `V0⁻¹ = a5 + Q⁰(prior means) - Q(posterior means)`
    pub v0_inv: SpdMatrix,
}

impl PosteriorHyper {
    pub fn tau_mu(&self) -> f64 {
        self.a4
    }

    pub fn tau_alpha(&self) -> f64 {
        self.a3
    }

    pub fn tau_mu_alpha(&self) -> f64 {
        self.a0
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    /// Inverse of the posterior mean of `Λ`: `2 V0⁻¹ / df`. With a flat
    /// prior this is the maximum likelihood update.
    pub fn sigma_hat(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.v0_inv.matrix() * (2.0 / self.df))
    }

    /// Cholesky factor entries `(c11, c21, c22)` of `T⁻¹`.
    fn block_factor(&self) -> (f64, f64, f64) {
        let d = 4.0 * self.a3 * self.a4 - self.a0 * self.a0;
        let (s11, s21, s22) = (2.0 * self.a3 / d, -self.a0 / d, 2.0 * self.a4 / d);
        let c11 = s11.sqrt();
        let c21 = s21 / c11;
        (c11, c21, (s22 - c21 * c21).sqrt())
    }
}

/// `a_j = a_j⁰ + t_j` and the derived quantities.
pub fn update_hypers(prior: &ComponentPrior, stats: &SufficientStats, component: usize) -> Result<PosteriorHyper> {
    let p = prior.dim();
    if stats.dim() != p {
        return Err(Error::Shape {
            expected: p,
            found: stats.dim(),
        });
    }
    let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let a0 = prior.a0 + stats.t0;
    let a1 = add(&prior.a1, &stats.t1);
    let a2 = add(&prior.a2, &stats.t2);
    let a3 = prior.a3 + stats.t3;
    let a4 = prior.a4 + stats.t4;
    let a5 = add(&prior.a5, &stats.t5);

    let (mu0, alpha0, d) = block_means(a0, &a1, &a2, a3, a4);
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::DegeneratePosterior { component });
    }
    let q_prior = prior.q_at_means();
    let q_post = q_matrix(&mu0, &alpha0, a0, a3, a4);
    let v: Vec<f64> = (0..p * p).map(|j| a5[j] + q_prior[j] - q_post[j]).collect();
    let v0_inv = SpdMatrix::new(symmetrize(&DMatrix::from_row_slice(p, p, &v)))
        .map_err(|_| Error::DegeneratePosterior { component })?;
    Ok(PosteriorHyper {
        df: prior.df + stats.t0,
        a0,
        a1,
        a2,
        a3,
        a4,
        a5,
        mu0,
        alpha0,
        v0_inv,
    })
}

/// One joint posterior draw: `Λ ~ Wishart(df, (2 V0⁻¹)⁻¹)`, then
/// `(μ, α) | Λ ~ N((μ0, α0), T⁻¹ ⊗ Λ⁻¹)`.
pub fn draw_component_params<R: Rng + ?Sized>(post: &PosteriorHyper, rng: &mut R) -> Result<SalParams> {
    let p = post.dim();
    let inv_scale = SpdMatrix::new(post.v0_inv.matrix() * 2.0)?;
    let lambda = wishart_sample_inv_scale(post.df, &inv_scale, rng)?;
    let sigma = lambda.inverse()?;
    let (c11, c21, c22) = post.block_factor();
    let l = sigma.cholesky().l();
    let z1: Vec<f64> = (0..p).map(|_| standard_normal(rng)).collect();
    let z2: Vec<f64> = (0..p).map(|_| standard_normal(rng)).collect();
    let lz1 = lower_times(l, &z1);
    let lz2 = lower_times(l, &z2);
    let mu = (0..p).map(|j| post.mu0[j] + c11 * lz1[j]).collect();
    let alpha = (0..p).map(|j| post.alpha0[j] + c21 * lz1[j] + c22 * lz2[j]).collect();
    SalParams::new(mu, alpha, sigma)
}
