//! Symmetric positive-definite matrices and the Cholesky machinery behind
//! every quadratic form in the crate. Inverses are only formed where a caller
//! needs the matrix itself (e.g. turning a precision draw into a covariance).

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const SYMMETRY_RTOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix. Only the lower triangle is read.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Shape {
                expected: n,
                found: m.ncols(),
            });
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `ln |A|`
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_lower_in_place(x.as_mut_slice());
        self.solve_upper_in_place(x.as_mut_slice());
        x
    }

    /// `vᵀ A⁻¹ v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut y = v.to_vec();
        self.solve_lower_in_place(&mut y);
        y.iter().map(|t| t * t).sum()
    }

    /// `uᵀ A⁻¹ v`
    pub fn bilinear_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut a = u.to_vec();
        let mut b = v.to_vec();
        self.solve_lower_in_place(&mut a);
        self.solve_lower_in_place(&mut b);
        a.iter().zip(&b).map(|(x, y)| x * y).sum()
    }

    /// `A⁻¹`, symmetrised.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.solve_lower_in_place(&mut e);
            self.solve_upper_in_place(&mut e);
            for i in 0..n {
                inv[(i, j)] = e[i];
            }
        }
        symmetrize(&inv)
    }

    /// `L Lᵀ`
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky,
}

impl SpdMatrix {
    /// Validates symmetry (relative to the largest entry) and positive
    /// definiteness. The stored matrix is the exact symmetrisation of `m`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Shape {
                expected: n,
                found: m.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::Domain("SPD matrix must have dimension >= 1".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("SPD matrix has non-finite entries".into()));
        }
        let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let matrix = symmetrize(&m);
        let chol = Cholesky::new(&matrix)?;
        Ok(Self { matrix, chol })
    }

    pub fn from_row_slice(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::Shape {
                expected: dim * dim,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.chol.inverse())
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }
}

impl TryFrom<Vec<Vec<f64>>> for SpdMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_slice(n, &flat)
    }
}

impl From<SpdMatrix> for Vec<Vec<f64>> {
    fn from(m: SpdMatrix) -> Self {
        matrix_rows(&m.matrix)
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Squared Mahalanobis distance `(x-mu)ᵀ Σ⁻¹ (x-mu)` via a triangular solve.
pub fn mahalanobis(x: &[f64], mu: &[f64], sigma: &SpdMatrix) -> Result<f64> {
    let p = sigma.dim();
    if x.len() != p {
        return Err(Error::Shape {
            expected: p,
            found: x.len(),
        });
    }
    if mu.len() != p {
        return Err(Error::Shape {
            expected: p,
            found: mu.len(),
        });
    }
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    Ok(sigma.cholesky().quad_form(&diff))
}
