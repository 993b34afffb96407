//! Special functions and the dense linear algebra the models are built on.

mod bessel;
mod data;
mod linalg;
pub mod quadrature;

pub use bessel::{bessel_k_ratio, log_bessel_k};
pub use data::DataMatrix;
pub use linalg::{mahalanobis, Cholesky, SpdMatrix};

pub(crate) use linalg::symmetrize;

/// `ln Σ exp(v)`, exact for a single finite maximum and `-inf` for an empty
/// or all-`-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
