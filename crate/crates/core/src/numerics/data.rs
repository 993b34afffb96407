use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense row-major `n × p` matrix of observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::Shape {
                expected: n * p,
                found: values.len(),
            });
        }
        Ok(Self { n, p, values })
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            values: vec![0.0; n * p],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::Shape {
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            n: rows.len(),
            p,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: idx.len(),
            p: self.p,
            values,
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for row in self.rows() {
            for (a, x) in m.iter_mut().zip(row) {
                *a += x;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n as f64);
        m
    }

    /// Covariance with divisor `n - 1`, returned row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let mean = self.column_means();
        let p = self.p;
        let mut c = vec![0.0; p * p];
        for row in self.rows() {
            for j in 0..p {
                let dj = row[j] - mean[j];
                for k in 0..=j {
                    c[j * p + k] += dj * (row[k] - mean[k]);
                }
            }
        }
        let denom = (self.n as f64 - 1.0).max(1.0);
        for j in 0..p {
            for k in 0..=j {
                let v = c[j * p + k] / denom;
                c[j * p + k] = v;
                c[k * p + j] = v;
            }
        }
        c
    }
}

impl TryFrom<Vec<Vec<f64>>> for DataMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DataMatrix> for Vec<Vec<f64>> {
    fn from(m: DataMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}
