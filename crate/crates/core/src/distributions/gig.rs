//! Generalized inverse Gaussian distribution.
//!
//! Parameterised as `f(y) ∝ y^(nu-1) exp(-(phi*y + chi/y)/2)` on `y > 0`.
//! Sampling follows Hörmann & Leydold (2014): every draw is taken from the
//! one-parameter standard form with `omega = sqrt(phi*chi)` and `|nu|`, then
//! scaled by `sqrt(chi/phi)` (or inverted when `nu < 0`).

use crate::error::{Error, Result};
use crate::numerics::{bessel_k_ratio, log_bessel_k};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    phi: f64,
    chi: f64,
    nu: f64,
}

impl GigParams {
    /// Both `phi` and `chi` must be positive and finite; the gamma and
    /// inverse-gamma limits are not supported.
    pub fn new(phi: f64, chi: f64, nu: f64) -> Result<Self> {
        if !(phi > 0.0 && phi.is_finite()) || !(chi > 0.0 && chi.is_finite()) || !nu.is_finite() {
            return Err(Error::Domain(format!(
                "GIG requires phi > 0, chi > 0 and finite nu (got phi={phi}, chi={chi}, nu={nu})"
            )));
        }
        Ok(Self { phi, chi, nu })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `sqrt(phi * chi)`, the argument of every Bessel function involved.
    pub fn omega(&self) -> f64 {
        (self.phi * self.chi).sqrt()
    }

    /// Law of `1/Y`: `GIG(chi, phi, -nu)`.
    pub fn reciprocal(&self) -> Self {
        Self {
            phi: self.chi,
            chi: self.phi,
            nu: -self.nu,
        }
    }

    pub fn log_density(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("GIG density requires y > 0, got {y}")));
        }
        Ok(self.log_normalizer()? + (self.nu - 1.0) * y.ln()
            - 0.5 * (self.phi * y + self.chi / y))
    }

    /// `(nu/2) ln(phi/chi) - ln 2 - ln K_nu(omega)`
    pub fn log_normalizer(&self) -> Result<f64> {
        Ok(0.5 * self.nu * (self.phi / self.chi).ln()
            - std::f64::consts::LN_2
            - log_bessel_k(self.nu, self.omega())?)
    }

    /// `E[Y] = sqrt(chi/phi) K_{nu+1}(omega) / K_nu(omega)`
    pub fn mean(&self) -> Result<f64> {
        Ok((self.chi / self.phi).sqrt() * bessel_k_ratio(self.nu, self.omega())?)
    }

    /// `E[1/Y]`, evaluated as the mean of the reciprocal law.
    ///
    /// Algebraically equal to `sqrt(phi/chi) K_{nu+1}/K_nu - 2 nu / chi`, but
    /// that form cancels catastrophically when `chi` is small and `nu > 0`.
    pub fn mean_inverse(&self) -> Result<f64> {
        self.reciprocal().mean()
    }

    /// `E[Y^2] = (chi/phi) K_{nu+2}(omega) / K_nu(omega)`
    pub fn second_moment(&self) -> Result<f64> {
        let w = self.omega();
        Ok(self.chi / self.phi
            * (log_bessel_k(self.nu + 2.0, w)? - log_bessel_k(self.nu, w)?).exp())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lambda = self.nu.abs();
        let omega = self.omega();
        let x = sample_standard(lambda, omega, rng);
        let scale = (self.chi / self.phi).sqrt();
        if self.nu < 0.0 {
            scale / x
        } else {
            scale * x
        }
    }
}

pub fn gig_log_density(y: f64, params: &GigParams) -> Result<f64> {
    params.log_density(y)
}

pub fn gig_mean(params: &GigParams) -> Result<f64> {
    params.mean()
}

pub fn gig_mean_inverse(params: &GigParams) -> Result<f64> {
    params.mean_inverse()
}

pub fn gig_sample<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

/// Mode of the standard form `x^(lambda-1) exp(-omega/2 (x + 1/x))`.
fn standard_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn sample_standard<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    if lambda > 2.0 || omega > 3.0 {
        rou_shifted(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_plain(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    }
}

/// Ratio-of-uniforms without mode shift.
fn rou_plain<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && x.is_finite() && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Ratio-of-uniforms with the mode shifted to the origin; the bounding
/// rectangle comes from the roots of a depressed cubic.
fn rou_shifted<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && x.is_finite() && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a three-piece hat for `lambda < 1` and small `omega`,
/// where the density is log-concave-like with a pole-free spike near zero.
fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = standard_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2) = if x0 >= 2.0 / omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        let k2 = (2.0 / omega).powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0_f64).exp() / omega)
    };
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = omega * (omega.exp() * v).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let a = x0.max(2.0 / omega);
                let x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}
