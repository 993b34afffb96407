//! Multivariate shifted asymmetric Laplace distribution.
//!
//! `X = mu + W alpha + sqrt(W) N` with `W ~ Exp(1)` and `N ~ N(0, Sigma)`.
//! The marginal density involves `K_nu` with `nu = (2 - p)/2` evaluated at
//! `u = sqrt((2 + alpha' Sigma^-1 alpha) delta)`, where `delta` is the squared
//! Mahalanobis distance of `x` from `mu`.

use super::gig::GigParams;
use super::multivariate::{correlated_normal, exp1_sample};
use crate::error::{Error, Result};
use crate::numerics::{log_bessel_k, DataMatrix, SpdMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SalParamsRepr")]
pub struct SalParams {
    mu: Vec<f64>,
    alpha: Vec<f64>,
    sigma: SpdMatrix,
}

#[derive(Deserialize)]
struct SalParamsRepr {
    mu: Vec<f64>,
    alpha: Vec<f64>,
    sigma: SpdMatrix,
}

impl TryFrom<SalParamsRepr> for SalParams {
    type Error = Error;

    fn try_from(r: SalParamsRepr) -> Result<Self> {
        SalParams::new(r.mu, r.alpha, r.sigma)
    }
}

impl SalParams {
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, sigma: SpdMatrix) -> Result<Self> {
        let p = sigma.dim();
        for v in [&mu, &alpha] {
            if v.len() != p {
                return Err(Error::Shape {
                    expected: p,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("SAL location and skewness must be finite".into()));
            }
        }
        Ok(Self { mu, alpha, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    /// Precomputes the quantities shared by every density evaluation.
    pub fn kernel(&self) -> SalKernel<'_> {
        SalKernel::new(self)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.kernel().log_density(x)
    }

    /// One draw together with the latent scale that produced it.
    pub fn sample_with_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let w = exp1_sample(rng);
        let n = correlated_normal(&self.sigma, rng);
        let sw = w.sqrt();
        let x = (0..self.dim())
            .map(|j| self.mu[j] + w * self.alpha[j] + sw * n[j])
            .collect();
        (x, w)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DataMatrix {
        let mut out = DataMatrix::zeros(n, self.dim());
        for i in 0..n {
            let (x, _) = self.sample_with_scale(rng);
            out.row_mut(i).copy_from_slice(&x);
        }
        out
    }
}

pub fn sal_log_density(x: &[f64], params: &SalParams) -> Result<f64> {
    params.log_density(x)
}

pub fn sal_sample<R: Rng + ?Sized>(params: &SalParams, n: usize, rng: &mut R) -> DataMatrix {
    params.sample(n, rng)
}

/// Cached `Sigma^-1 alpha`, `alpha' Sigma^-1 alpha` and `ln |Sigma|`.
#[derive(Clone, Debug)]
pub struct SalKernel<'a> {
    params: &'a SalParams,
    inv_alpha: Vec<f64>,
    phi: f64,
    log_const: f64,
    nu: f64,
}

impl<'a> SalKernel<'a> {
    fn new(params: &'a SalParams) -> Self {
        let p = params.dim();
        let chol = params.sigma.cholesky();
        let inv_alpha = chol
            .solve(&nalgebra::DVector::from_column_slice(&params.alpha))
            .as_slice()
            .to_vec();
        let alpha_quad: f64 = inv_alpha.iter().zip(&params.alpha).map(|(a, b)| a * b).sum();
        let log_const = LN_2 - 0.5 * p as f64 * (2.0 * PI).ln() - 0.5 * chol.log_det();
        Self {
            params,
            inv_alpha,
            phi: 2.0 + alpha_quad,
            log_const,
            nu: (2.0 - p as f64) / 2.0,
        }
    }

    pub fn params(&self) -> &SalParams {
        self.params
    }

    /// `2 + alpha' Sigma^-1 alpha`
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(2 - p) / 2`
    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.params.dim() {
            return Err(Error::Shape {
                expected: self.params.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Squared Mahalanobis distance `delta` and the linear term `(x - mu)' Sigma^-1 alpha`.
    pub fn distance_terms(&self, x: &[f64]) -> (f64, f64) {
        let diff: Vec<f64> = x.iter().zip(&self.params.mu).map(|(a, b)| a - b).collect();
        let delta = self.params.sigma.cholesky().quad_form(&diff);
        let lin = diff.iter().zip(&self.inv_alpha).map(|(a, b)| a * b).sum();
        (delta, lin)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let (delta, lin) = self.distance_terms(x);
        if self.params.dim() == 1 {
            return Ok(self.univariate(delta, lin));
        }
        if !(delta > 0.0) {
            return Err(Error::UnboundedDensity);
        }
        self.general(delta, lin)
    }

    /// The Bessel form, valid for any dimension when `delta > 0`.
    fn general(&self, delta: f64, lin: f64) -> Result<f64> {
        let u = (self.phi * delta).sqrt();
        Ok(self.log_const + lin + 0.5 * self.nu * (delta.ln() - self.phi.ln()) + log_bessel_k(self.nu, u)?)
    }

    /// With `p = 1`, `K_{1/2}` is elementary and the density reduces to
    /// `exp(lin - u) / (sigma sqrt(phi))`, finite at `x = mu`.
    fn univariate(&self, delta: f64, lin: f64) -> f64 {
        let u = (self.phi * delta).sqrt();
        let log_sigma = 0.5 * self.params.sigma.log_det();
        lin - u - log_sigma - 0.5 * self.phi.ln()
    }

    /// `ln N(x | mu + w alpha, w Sigma)`
    pub fn log_density_given_scale(&self, x: &[f64], w: f64) -> f64 {
        let (delta, lin) = self.distance_terms(x);
        self.log_density_given_scale_terms(delta, lin, w)
    }

    /// As [`Self::log_density_given_scale`], from precomputed distance terms.
    pub fn log_density_given_scale_terms(&self, delta: f64, lin: f64, w: f64) -> f64 {
        let p = self.params.dim() as f64;
        // (x - mu - w alpha)' Sigma^-1 (x - mu - w alpha) / w
        let quad = delta / w - 2.0 * lin + w * (self.phi - 2.0);
        self.log_const - LN_2 - 0.5 * p * w.ln() - 0.5 * quad
    }

    /// Law of `W | X = x`: GIG with `phi = 2 + alpha' Sigma^-1 alpha`,
    /// `chi = delta(x, mu | Sigma)` and index `(2 - p)/2`.
    pub fn conditional_scale(&self, x: &[f64]) -> Result<GigParams> {
        self.check_dim(x)?;
        let (delta, _) = self.distance_terms(x);
        self.conditional_scale_from_distance(delta)
    }

    pub fn conditional_scale_from_distance(&self, delta: f64) -> Result<GigParams> {
        if !(delta > 0.0) {
            return Err(Error::UnboundedDensity);
        }
        GigParams::new(self.phi, delta, self.nu)
    }
}
