//! Gaussian, Wishart, Dirichlet and unit-exponential draws.

use crate::error::{Error, Result};
use crate::numerics::{symmetrize, SpdMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn exp1_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// `L z` for the Cholesky factor `L` of `cov` and standard normal `z`.
pub fn correlated_normal<R: Rng + ?Sized>(cov: &SpdMatrix, rng: &mut R) -> Vec<f64> {
    let p = cov.dim();
    let z: Vec<f64> = (0..p).map(|_| standard_normal(rng)).collect();
    lower_times(cov.cholesky().l(), &z)
}

pub(crate) fn lower_times(l: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    let p = z.len();
    (0..p)
        .map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum())
        .collect()
}

pub fn mvn_sample<R: Rng + ?Sized>(mean: &[f64], cov: &SpdMatrix, rng: &mut R) -> Result<Vec<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::Shape {
            expected: cov.dim(),
            found: mean.len(),
        });
    }
    let mut x = correlated_normal(cov, rng);
    x.iter_mut().zip(mean).for_each(|(a, m)| *a += m);
    Ok(x)
}

/// Bartlett construction: `W = (L A)(L A)ᵀ` with `A` lower triangular,
/// `A_ii² ~ χ²(df - i)` and standard normal entries below the diagonal.
pub fn wishart_sample<R: Rng + ?Sized>(df: f64, scale: &SpdMatrix, rng: &mut R) -> Result<SpdMatrix> {
    let a = bartlett_factor(df, scale.dim(), rng)?;
    let la = scale.cholesky().l() * a;
    SpdMatrix::new(symmetrize(&(&la * la.transpose())))
}

/// Wishart draw whose scale is given through its inverse, avoiding an
/// explicit inversion: with `inv_scale = L Lᵀ`, the scale factors as
/// `L^-ᵀ L^-1` and the Bartlett product becomes `(L^-ᵀ A)(L^-ᵀ A)ᵀ`.
pub fn wishart_sample_inv_scale<R: Rng + ?Sized>(
    df: f64,
    inv_scale: &SpdMatrix,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let p = inv_scale.dim();
    let a = bartlett_factor(df, p, rng)?;
    let chol = inv_scale.cholesky();
    let mut b = DMatrix::<f64>::zeros(p, p);
    let mut col = vec![0.0; p];
    for j in 0..p {
        for i in 0..p {
            col[i] = a[(i, j)];
        }
        chol.solve_upper_in_place(&mut col);
        for i in 0..p {
            b[(i, j)] = col[i];
        }
    }
    SpdMatrix::new(symmetrize(&(&b * b.transpose())))
}

fn bartlett_factor<R: Rng + ?Sized>(df: f64, p: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(df > p as f64 - 1.0) || !df.is_finite() {
        return Err(Error::Domain(format!(
            "Wishart degrees of freedom {df} must exceed dimension - 1 = {}",
            p - 1
        )));
    }
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let shape = 0.5 * (df - i as f64);
        let chi2: f64 = Gamma::new(shape, 2.0)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng);
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    Ok(a)
}

/// Normalised independent gamma draws.
pub fn dirichlet_sample<R: Rng + ?Sized>(concentrations: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if concentrations.is_empty() {
        return Err(Error::Domain("Dirichlet needs at least one concentration".into()));
    }
    let mut draws = Vec::with_capacity(concentrations.len());
    for &a in concentrations {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "Dirichlet concentrations must be positive, got {a}"
            )));
        }
        let g: f64 = Gamma::new(a, 1.0)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng);
        draws.push(g);
    }
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("all Dirichlet gamma draws underflowed".into()));
    }
    draws.iter_mut().for_each(|g| *g /= total);
    Ok(draws)
}
