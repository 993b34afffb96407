//! Mixture parameters, latent state, sufficient statistics and the
//! responsibility computations shared by both engines.

use crate::distributions::{SalKernel, SalParams};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, DataMatrix};
use serde::{Deserialize, Serialize};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureParamsRepr")]
pub struct MixtureParams {
    weights: Vec<f64>,
    components: Vec<SalParams>,
}

#[derive(Deserialize)]
struct MixtureParamsRepr {
    weights: Vec<f64>,
    components: Vec<SalParams>,
}

impl TryFrom<MixtureParamsRepr> for MixtureParams {
    type Error = Error;

    fn try_from(r: MixtureParamsRepr) -> Result<Self> {
        MixtureParams::new(r.weights, r.components)
    }
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<SalParams>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::Shape {
                expected: components.len().max(1),
                found: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("mixing weights must be strictly positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("mixing weights sum to {sum}, not 1")));
        }
        let p = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != p) {
            return Err(Error::Shape {
                expected: p,
                found: c.dim(),
            });
        }
        Ok(Self { weights, components })
    }

    /// Like [`MixtureParams::new`], but rescales the weights to sum to one
    /// first; useful when they come from counts.
    pub fn normalized(weights: Vec<f64>, components: Vec<SalParams>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / sum).collect(), components)
    }

    pub fn g(&self) -> usize {
        self.weights.len()
    }

    pub fn p(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[SalParams] {
        &self.components
    }

    pub fn component(&self, g: usize) -> &SalParams {
        &self.components[g]
    }

    /// Reorders components so that new component `k` is old `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            weights: order.iter().map(|&k| self.weights[k]).collect(),
            components: order.iter().map(|&k| self.components[k].clone()).collect(),
        }
    }

    pub fn log_likelihood(&self, data: &DataMatrix) -> Result<f64> {
        mixture_log_likelihood(data, self)
    }
}

/// Per-observation responsibilities `z` and latent scales `w`, both `n × G`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentState {
    pub z: DataMatrix,
    pub w: DataMatrix,
}

/// Conditional expectations from an E-step: responsibilities plus
/// `a = E[W | x]` and `b = E[1/W | x]` per observation and component.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleMoments {
    pub z: DataMatrix,
    pub a: DataMatrix,
    pub b: DataMatrix,
}

impl LatentState {
    /// Views the realised scales as degenerate moments (`a = w`, `b = 1/w`).
    pub fn as_moments(&self) -> ScaleMoments {
        let inv: Vec<f64> = self.w.as_slice().iter().map(|w| 1.0 / w).collect();
        ScaleMoments {
            z: self.z.clone(),
            a: self.w.clone(),
            b: DataMatrix::new(self.w.nrows(), self.w.ncols(), inv).expect("same shape"),
        }
    }
}

/// Sufficient statistics of one component:
/// `t0 = Σ z`, `t1 = Σ z x`, `t2 = Σ (z/w) x`, `t3 = ½ Σ z w`,
/// `t4 = ½ Σ z/w`, `t5 = ½ Σ (z/w) x xᵀ` (row-major `p × p`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub t0: f64,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub t3: f64,
    pub t4: f64,
    pub t5: Vec<f64>,
}

impl SufficientStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            t0: 0.0,
            t1: vec![0.0; p],
            t2: vec![0.0; p],
            t3: 0.0,
            t4: 0.0,
            t5: vec![0.0; p * p],
        }
    }

    pub fn dim(&self) -> usize {
        self.t1.len()
    }

    fn add_observation(&mut self, x: &[f64], z: f64, a: f64, b: f64) {
        let p = x.len();
        self.t0 += z;
        self.t3 += 0.5 * z * a;
        self.t4 += 0.5 * z * b;
        let zb = z * b;
        for j in 0..p {
            self.t1[j] += z * x[j];
            self.t2[j] += zb * x[j];
            for k in 0..p {
                self.t5[j * p + k] += 0.5 * zb * x[j] * x[k];
            }
        }
    }
}

/// Statistics from realised scales (`w` and `1/w`).
pub fn accumulate_stats(data: &DataMatrix, latent: &LatentState) -> Vec<SufficientStats> {
    accumulate_stats_from_moments(data, &latent.as_moments())
}

/// Statistics from expected scales, as used by the EM algorithm.
pub fn accumulate_stats_from_moments(data: &DataMatrix, m: &ScaleMoments) -> Vec<SufficientStats> {
    let g = m.z.ncols();
    let mut stats = vec![SufficientStats::zeros(data.ncols()); g];
    for (i, x) in data.rows().enumerate() {
        for (k, s) in stats.iter_mut().enumerate() {
            let z = m.z.get(i, k);
            if z != 0.0 {
                s.add_observation(x, z, m.a.get(i, k), m.b.get(i, k));
            }
        }
    }
    stats
}

/// Statistics of a hard partition with per-observation scales.
pub fn accumulate_stats_hard(data: &DataMatrix, labels: &[usize], w: &DataMatrix, g: usize) -> Vec<SufficientStats> {
    let mut stats = vec![SufficientStats::zeros(data.ncols()); g];
    for (i, x) in data.rows().enumerate() {
        let k = labels[i];
        let wi = w.get(i, k);
        stats[k].add_observation(x, 1.0, wi, 1.0 / wi);
    }
    stats
}

/// How the per-component terms of a responsibility are formed.
#[derive(Clone, Copy, Debug)]
pub enum Weighting<'a> {
    /// `π_g f_SAL(x | θ_g)`, the EM form.
    Marginal,
    /// `π_g N(x | μ_g + w α_g, w Σ_g) e^{-w}` at the given scales, the Gibbs form.
    GivenScales(&'a DataMatrix),
}

/// Row-normalised responsibilities together with the sum of the per-row
/// log normalisers (the observed-data log-likelihood in the marginal form).
pub fn responsibilities(data: &DataMatrix, params: &MixtureParams, mode: Weighting<'_>) -> Result<(DataMatrix, f64)> {
    let (n, g) = (data.nrows(), params.g());
    let kernels: Vec<SalKernel<'_>> = params.components().iter().map(SalParams::kernel).collect();
    let log_w: Vec<f64> = params.weights().iter().map(|w| w.ln()).collect();
    let mut z = DataMatrix::zeros(n, g);
    let mut total = 0.0;
    let mut terms = vec![0.0; g];
    for (i, x) in data.rows().enumerate() {
        for k in 0..g {
            terms[k] = log_w[k]
                + match mode {
                    Weighting::Marginal => kernels[k].log_density(x).map_err(|e| match e {
                        Error::UnboundedDensity => Error::UnboundedLikelihood { row: i, component: k },
                        other => other,
                    })?,
                    Weighting::GivenScales(w) => {
                        let wik = w.get(i, k);
                        kernels[k].log_density_given_scale(x, wik) - wik
                    }
                };
        }
        let norm = log_sum_exp(&terms);
        if !norm.is_finite() {
            return Err(Error::NonFiniteRow { row: i });
        }
        total += norm;
        let row = z.row_mut(i);
        for k in 0..g {
            row[k] = (terms[k] - norm).exp();
        }
    }
    Ok((z, total))
}

/// `Σ_i ln Σ_g π_g f_SAL(x_i | θ_g)`
pub fn mixture_log_likelihood(data: &DataMatrix, params: &MixtureParams) -> Result<f64> {
    if data.ncols() != params.p() {
        return Err(Error::Shape {
            expected: params.p(),
            found: data.ncols(),
        });
    }
    let kernels: Vec<SalKernel<'_>> = params.components().iter().map(SalParams::kernel).collect();
    let log_w: Vec<f64> = params.weights().iter().map(|w| w.ln()).collect();
    let mut terms = vec![0.0; params.g()];
    let mut total = 0.0;
    for (i, x) in data.rows().enumerate() {
        for (k, kern) in kernels.iter().enumerate() {
            terms[k] = log_w[k]
                + kern.log_density(x).map_err(|e| match e {
                    Error::UnboundedDensity => Error::UnboundedLikelihood { row: i, component: k },
                    other => other,
                })?;
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// MAP labels: the column of the largest entry in each row (first on ties).
pub fn map_labels(z: &DataMatrix) -> Vec<usize> {
    z.rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                .0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SpdMatrix;
    use proptest::prelude::*;

    fn sal(mu: &[f64], alpha: &[f64], sigma: &[f64]) -> SalParams {
        let p = mu.len();
        SalParams::new(mu.to_vec(), alpha.to_vec(), SpdMatrix::from_row_slice(p, sigma).unwrap()).unwrap()
    }

    fn two_component() -> MixtureParams {
        MixtureParams::new(
            vec![0.4, 0.6],
            vec![
                sal(&[0.0, 5.0], &[2.0, 2.0], &[1.0, 0.5, 0.5, 1.0]),
                sal(&[0.0, -2.0], &[2.0, 1.0], &[1.0, 0.0, 0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn weights_are_validated() {
        let c = sal(&[0.0], &[0.0], &[1.0]);
        assert!(MixtureParams::new(vec![0.5, 0.4], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureParams::new(vec![1.0, 0.0], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureParams::new(vec![1.0], vec![c.clone(), c.clone()]).is_err());
        let d = sal(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        assert!(MixtureParams::new(vec![0.5, 0.5], vec![c, d]).is_err());
    }

    #[test]
    fn single_component_likelihood_is_density_sum() {
        let c = sal(&[0.0, 5.0], &[2.0, 2.0], &[1.0, 0.5, 0.5, 1.0]);
        let m = MixtureParams::new(vec![1.0], vec![c.clone()]).unwrap();
        let data = DataMatrix::from_rows(&[vec![1.0, 6.0], vec![-0.5, 4.0], vec![3.0, 8.0]]).unwrap();
        let direct: f64 = data.rows().map(|x| c.log_density(x).unwrap()).sum();
        assert!((m.log_likelihood(&data).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn univariate_hand_sum() {
        // p = 1, mu = 0, alpha = 0, sigma^2 = 1: Laplace density e^{-√2|x|}/√2
        let c = sal(&[0.0], &[0.0], &[1.0]);
        let m = MixtureParams::new(vec![1.0], vec![c]).unwrap();
        let xs = [-1.5, -0.2, 0.0, 0.7, 2.0];
        let data = DataMatrix::new(5, 1, xs.to_vec()).unwrap();
        let expected: f64 = xs.iter().map(|x| -(2.0_f64.sqrt()) * f64::abs(*x) - 0.5 * 2.0_f64.ln()).sum();
        assert!((m.log_likelihood(&data).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn near_degenerate_weight_is_continuous() {
        let c1 = sal(&[0.0], &[0.5], &[1.0]);
        let c2 = sal(&[3.0], &[-0.5], &[2.0]);
        let data = DataMatrix::new(4, 1, vec![-1.0, 0.0, 0.5, 2.0]).unwrap();
        let single = MixtureParams::new(vec![1.0], vec![c1.clone()]).unwrap().log_likelihood(&data).unwrap();
        let eps = 1e-9;
        let mix = MixtureParams::new(vec![1.0 - eps, eps], vec![c1, c2]).unwrap().log_likelihood(&data).unwrap();
        assert!((mix - single).abs() < 1e-6);
    }

    #[test]
    fn unbounded_point_is_reported() {
        let m = two_component();
        let data = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, -2.0]]).unwrap();
        assert!(matches!(
            m.log_likelihood(&data),
            Err(Error::UnboundedLikelihood { row: 1, component: 1 })
        ));
    }

    #[test]
    fn likelihood_is_permutation_invariant() {
        let m = two_component();
        let data = DataMatrix::from_rows(&[vec![1.0, 6.0], vec![2.0, -1.0], vec![0.3, 0.3]]).unwrap();
        let a = m.log_likelihood(&data).unwrap();
        let b = m.permuted(&[1, 0]).log_likelihood(&data).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn hand_example_statistics() {
        let data = DataMatrix::new(1, 1, vec![3.0]).unwrap();
        let latent = LatentState {
            z: DataMatrix::new(1, 1, vec![1.0]).unwrap(),
            w: DataMatrix::new(1, 1, vec![2.0]).unwrap(),
        };
        let s = &accumulate_stats(&data, &latent)[0];
        assert_eq!(s.t0, 1.0);
        assert_eq!(s.t1, vec![3.0]);
        assert_eq!(s.t2, vec![1.5]);
        assert_eq!(s.t3, 1.0);
        assert_eq!(s.t4, 0.25);
        assert_eq!(s.t5, vec![2.25]);
    }

    #[test]
    fn empty_component_and_scale_doubling() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]]).unwrap();
        let z = DataMatrix::new(3, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let w = DataMatrix::new(3, 2, vec![0.5, 1.0, 2.0, 1.0, 1.5, 1.0]).unwrap();
        let s = accumulate_stats(&data, &LatentState { z: z.clone(), w: w.clone() });
        assert_eq!(s[1], SufficientStats::zeros(2));
        let w2 = DataMatrix::new(3, 2, w.as_slice().iter().map(|v| 2.0 * v).collect()).unwrap();
        let s2 = accumulate_stats(&data, &LatentState { z, w: w2 });
        assert!((s2[0].t3 - 2.0 * s[0].t3).abs() < 1e-15);
        assert!((s2[0].t4 - 0.5 * s[0].t4).abs() < 1e-15);
        assert_eq!(s2[0].t1, s[0].t1);
    }

    #[test]
    fn identical_components_give_prior_weights() {
        let c = sal(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.2, 0.2, 1.0]);
        let m = MixtureParams::new(vec![0.3, 0.7], vec![c.clone(), c]).unwrap();
        let data = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![-2.0, 0.5]]).unwrap();
        let (z, _) = responsibilities(&data, &m, Weighting::Marginal).unwrap();
        for row in z.rows() {
            assert!((row[0] - 0.3).abs() < 1e-15 && (row[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn dominant_component_takes_the_point() {
        let m = two_component();
        let data = DataMatrix::from_rows(&[vec![2.0, 7.0]]).unwrap();
        let (z, _) = responsibilities(&data, &m, Weighting::Marginal).unwrap();
        assert!(z.get(0, 0) > 0.99);
    }

    #[test]
    fn marginal_normalizer_is_log_likelihood() {
        let m = two_component();
        let data = DataMatrix::from_rows(&[vec![1.0, 6.0], vec![2.0, -1.0], vec![0.3, 0.3]]).unwrap();
        let (_, ll) = responsibilities(&data, &m, Weighting::Marginal).unwrap();
        assert!((ll - m.log_likelihood(&data).unwrap()).abs() < 1e-12);
    }

    fn naive_stats(data: &[Vec<f64>], z: &[Vec<f64>], w: &[Vec<f64>], k: usize) -> SufficientStats {
        let p = data[0].len();
        let mut s = SufficientStats::zeros(p);
        for i in 0..data.len() {
            s.t0 += z[i][k];
            s.t3 += z[i][k] * w[i][k] / 2.0;
            s.t4 += z[i][k] / w[i][k] / 2.0;
            for j in 0..p {
                s.t1[j] += z[i][k] * data[i][j];
                s.t2[j] += z[i][k] / w[i][k] * data[i][j];
                for l in 0..p {
                    s.t5[j * p + l] += z[i][k] / w[i][k] * data[i][j] * data[i][l] / 2.0;
                }
            }
        }
        s
    }

    proptest! {
        #[test]
        fn stats_match_naive_loops(
            n in 1usize..20,
            seed in proptest::collection::vec(0.01f64..1.0, 120),
            xs in proptest::collection::vec(-5.0f64..5.0, 60),
        ) {
            let p = 3;
            let rows: Vec<Vec<f64>> = (0..n).map(|i| xs[i * p..(i + 1) * p].to_vec()).collect();
            let z: Vec<Vec<f64>> = (0..n).map(|i| {
                let (a, b) = (seed[2 * i], seed[2 * i + 1]);
                vec![a / (a + b), b / (a + b)]
            }).collect();
            let w: Vec<Vec<f64>> = (0..n).map(|i| vec![seed[60 + 2 * i] * 3.0, seed[61 + 2 * i] * 3.0]).collect();
            let data = DataMatrix::from_rows(&rows).unwrap();
            let latent = LatentState { z: DataMatrix::from_rows(&z).unwrap(), w: DataMatrix::from_rows(&w).unwrap() };
            let stats = accumulate_stats(&data, &latent);
            for k in 0..2 {
                let naive = naive_stats(&rows, &z, &w, k);
                let s = &stats[k];
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
                prop_assert!(close(s.t0, naive.t0) && close(s.t3, naive.t3) && close(s.t4, naive.t4));
                for j in 0..p {
                    prop_assert!(close(s.t1[j], naive.t1[j]) && close(s.t2[j], naive.t2[j]));
                }
                for j in 0..p * p {
                    prop_assert!(close(s.t5[j], naive.t5[j]));
                }
            }
        }

        #[test]
        fn rows_sum_to_one(
            xs in proptest::collection::vec(-10.0f64..10.0, 20),
            ws in proptest::collection::vec(0.05f64..4.0, 20),
        ) {
            let m = two_component();
            let data = DataMatrix::new(10, 2, xs).unwrap();
            let w = DataMatrix::new(10, 2, ws).unwrap();
            for mode in [Weighting::Marginal, Weighting::GivenScales(&w)] {
                let (z, _) = responsibilities(&data, &m, mode).unwrap();
                for row in z.rows() {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                }
            }
        }
    }
}
