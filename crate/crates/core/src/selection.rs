//! Model selection (BIC, ICL) and classification scoring.

use crate::error::{Error, Result};
use crate::mixture::map_labels;
use crate::numerics::DataMatrix;
use serde::{Deserialize, Serialize};

/// Floor applied to `ln z` inside the ICL so that rows whose MAP entry
/// underflowed stay finite.
pub const LOG_FLOOR: f64 = -745.0;

/// How the scale matrices are counted in the free-parameter total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoConvention {
    /// `p(p+1)/2` per symmetric scale matrix.
    #[default]
    Full,
    /// `p(p-1)/2` per scale matrix, the off-diagonal entries only.
    OffDiagonal,
}

impl std::str::FromStr for RhoConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full-covariance" => Ok(Self::Full),
            "off-diagonal" => Ok(Self::OffDiagonal),
            other => Err(Error::Config(format!("unknown rho convention `{other}` (expected `full` or `off-diagonal`)"))),
        }
    }
}

/// `G - 1 + 2Gp + G·c(p)` with `c(p) = p(p+1)/2` (full) or `p(p-1)/2` (off-diagonal).
pub fn count_free_params(g: usize, p: usize, convention: RhoConvention) -> usize {
    let scale = match convention {
        RhoConvention::Full => p * (p + 1) / 2,
        RhoConvention::OffDiagonal => p * (p - 1) / 2,
    };
    g - 1 + 2 * g * p + g * scale
}

/// `2 ℓ - ρ ln n`; larger is better.
pub fn bic(loglik: f64, rho: usize, n: usize) -> f64 {
    2.0 * loglik - rho as f64 * (n as f64).ln()
}

/// `BIC + Σ_i ln z_{i,MAP(i)}`, with the logarithm floored at
/// [`LOG_FLOOR`].
pub fn icl(bic_value: f64, z: &DataMatrix) -> f64 {
    let labels = map_labels(z);
    let penalty: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &k)| z.get(i, k).ln().max(LOG_FLOOR))
        .sum();
    bic_value + penalty
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitScore {
    pub g: usize,
    pub loglik: f64,
    pub n_free_params: usize,
    pub bic: f64,
    pub icl: f64,
}

impl FitScore {
    pub fn new(loglik: f64, z: &DataMatrix, convention: RhoConvention, p: usize) -> Self {
        let (n, g) = (z.nrows(), z.ncols());
        let rho = count_free_params(g, p, convention);
        let b = bic(loglik, rho, n);
        Self {
            g,
            loglik,
            n_free_params: rho,
            bic: b,
            icl: icl(b, z),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Icl,
}

/// Index of the best score under `criterion`; the first wins ties.
pub fn select(scores: &[FitScore], criterion: Criterion) -> Option<usize> {
    let value = |s: &FitScore| match criterion {
        Criterion::Bic => s.bic,
        Criterion::Icl => s.icl,
    };
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| value(s).is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
            Some((_, v)) if v >= value(s) => best,
            _ => Some((i, value(s))),
        })
        .map(|(i, _)| i)
}

/// Contingency table of two labelings given as dense indices.
pub fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut t = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        t[i][j] += 1;
    }
    t
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index. When both labelings leave the index
/// undetermined (both a single cluster, or both all singletons) it is 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Domain("the adjusted Rand index needs at least two observations".into()));
    }
    let t = contingency(a, b);
    let index: f64 = t.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = t.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..t[0].len()).map(|j| choose2(t.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / choose2(a.len());
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Largest total of a one-to-one matching between rows and columns of a
/// count table (dynamic programming over column subsets).
fn best_matching(table: &[Vec<usize>]) -> usize {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    assert!(cols <= 20, "too many predicted classes for exact matching");
    // best[mask] = best total using the first popcount(mask) rows, allowing
    // rows to stay unmatched when there are more rows than columns
    let mut best = vec![None::<usize>; 1 << cols];
    best[0] = Some(0);
    for r in 0..rows {
        let mut next = best.clone();
        for mask in 0..(1usize << cols) {
            let Some(v) = best[mask] else { continue };
            for c in 0..cols {
                if mask & (1 << c) == 0 {
                    let m = mask | (1 << c);
                    let cand = v + table[r][c];
                    if next[m].is_none_or(|cur| cur < cand) {
                        next[m] = Some(cand);
                    }
                }
            }
        }
        best = next;
    }
    best.into_iter().flatten().max().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Rows are true classes, columns predicted classes.
    pub table: Vec<Vec<usize>>,
    /// Fraction of observations on the best one-to-one class matching.
    pub hit_rate: f64,
    pub ari: f64,
}

pub fn classification_report(truth: &[usize], predicted: &[usize]) -> Result<ClassificationReport> {
    let ari = ari(truth, predicted)?;
    let table = contingency(truth, predicted);
    let hits = best_matching(&table);
    Ok(ClassificationReport {
        hit_rate: hits as f64 / truth.len() as f64,
        table,
        ari,
    })
}
