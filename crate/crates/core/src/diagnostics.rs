//! Convergence assessment, label-switching resolution and posterior summaries.

use crate::error::{Error, Result};
use crate::mixture::MixtureParams;
use serde::{Deserialize, Serialize};

pub const PSRF_THRESHOLD: f64 = 1.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrfReport {
    pub rhat: f64,
    pub n_chains: usize,
    pub n_kept: usize,
    pub converged: bool,
    /// Every chain was constant; `rhat` is set to 1 by convention.
    pub constant: bool,
}

/// Gelman–Rubin potential scale reduction over whole, equal-length chains:
/// `V̂ = (n-1)/n W + (1 + 1/m) B/n` and `R̂ = sqrt(V̂ / W)`, where `W` is the
/// mean within-chain variance and `B/n` the variance of the chain means.
///
/// ```
/// use salmix::diagnostics::psrf;
/// let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
/// let b: Vec<f64> = (0..100).map(|i| (i as f64 * 1.3).cos()).collect();
/// assert!(psrf(&[&a[..], &b[..]]).unwrap().converged);
/// ```
pub fn psrf(traces: &[&[f64]]) -> Result<PsrfReport> {
    let m = traces.len();
    if m < 2 {
        return Err(Error::Domain(format!("PSRF needs at least two chains, got {m}")));
    }
    let n = traces[0].len();
    if n < 10 || traces.iter().any(|t| t.len() != n) {
        return Err(Error::Domain("PSRF needs equal-length chains of at least 10 values".into()));
    }
    if traces.iter().flat_map(|t| t.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("PSRF trace contains a non-finite value".into()));
    }
    let nf = n as f64;
    let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / nf).collect();
    let within: Vec<f64> = traces
        .iter()
        .zip(&means)
        .map(|(t, mu)| t.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0))
        .collect();
    let w = within.iter().sum::<f64>() / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    // B / n
    let b_over_n = means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m as f64 - 1.0);
    let (rhat, constant) = if w > 0.0 {
        let v = (nf - 1.0) / nf * w + (1.0 + 1.0 / m as f64) * b_over_n;
        ((v / w).sqrt(), false)
    } else if b_over_n > 0.0 {
        // constant chains at different levels
        (f64::MAX, false)
    } else {
        (1.0, true)
    };
    Ok(PsrfReport {
        rhat,
        n_chains: m,
        n_kept: n,
        converged: rhat < PSRF_THRESHOLD,
        constant,
    })
}

/// Component order that sorts the mixing proportions ascending, ties broken
/// by the lexicographic order of the locations.
pub fn relabel_order(params: &MixtureParams) -> Vec<usize> {
    let mut order: Vec<usize> = (0..params.g()).collect();
    order.sort_by(|&a, &b| {
        params.weights()[a].total_cmp(&params.weights()[b]).then_with(|| {
            let (ma, mb) = (params.component(a).mu(), params.component(b).mu());
            ma.iter().zip(mb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

/// Applies [`relabel_order`] to every sample.
pub fn relabel(samples: &[MixtureParams]) -> Vec<MixtureParams> {
    samples.iter().map(|s| s.permuted(&relabel_order(s))).collect()
}

/// How pooled draws are brought onto a common labelling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelabelMethod {
    /// [`relabel`] on every draw.
    WeightOrder,
    /// [`relabel_to_reference`].
    #[default]
    Reference,
}

/// All permutations of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Mahalanobis distances, in the metric of the reference component, between
/// the locations and between the means `μ + α`.
fn match_cost(draw: &crate::distributions::SalParams, reference: &crate::distributions::SalParams) -> f64 {
    let chol = reference.sigma().cholesky();
    let dmu: Vec<f64> = draw.mu().iter().zip(reference.mu()).map(|(a, b)| a - b).collect();
    let dmean: Vec<f64> = dmu
        .iter()
        .zip(draw.alpha().iter().zip(reference.alpha()))
        .map(|(d, (a, b))| d + a - b)
        .collect();
    chol.quad_form(&dmu) + chol.quad_form(&dmean)
}

/// The order (for [`MixtureParams::permuted`]) that puts the components of
/// `draw` closest to those of `reference`. Exhaustive up to eight
/// components, greedy beyond.
pub fn best_permutation(draw: &MixtureParams, reference: &MixtureParams) -> Vec<usize> {
    let g = reference.g();
    let cost: Vec<Vec<f64>> = (0..g)
        .map(|j| (0..g).map(|k| match_cost(draw.component(k), reference.component(j))).collect())
        .collect();
    if g <= 8 {
        return permutations(g)
            .into_iter()
            .map(|order| (order.iter().enumerate().map(|(j, &k)| cost[j][k]).sum::<f64>(), order))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, order)| order)
            .expect("at least one permutation");
    }
    let mut order = vec![usize::MAX; g];
    let mut used = vec![false; g];
    let mut pairs: Vec<(usize, usize)> = (0..g).flat_map(|j| (0..g).map(move |k| (j, k))).collect();
    pairs.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
    for (j, k) in pairs {
        if order[j] == usize::MAX && !used[k] {
            order[j] = k;
            used[k] = true;
        }
    }
    order
}

/// Matches every draw to a reference labelling, refines the reference as the
/// average of the matched draws until the matching stops changing, and
/// finally orders the components by ascending average weight. Unlike
/// [`relabel`], draws whose weights cross are not split between components.
pub fn relabel_to_reference(samples: &[MixtureParams]) -> Result<Vec<MixtureParams>> {
    let first = samples.first().ok_or_else(|| Error::Domain("no samples to relabel".into()))?;
    let mut reference = first.clone();
    let mut orders: Vec<Vec<usize>> = Vec::new();
    for _ in 0..50 {
        let next: Vec<Vec<usize>> = samples.iter().map(|s| best_permutation(s, &reference)).collect();
        let stable = next == orders;
        orders = next;
        let aligned: Vec<MixtureParams> = samples.iter().zip(&orders).map(|(s, o)| s.permuted(o)).collect();
        reference = average_params(&aligned)?;
        if stable {
            break;
        }
    }
    let last = relabel_order(&reference);
    Ok(samples
        .iter()
        .zip(&orders)
        .map(|(s, o)| s.permuted(o).permuted(&last))
        .collect())
}

/// Linear interpolation between order statistics (type 7). `sorted` must be
/// ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub n_samples: usize,
    pub interval_level: f64,
    pub scalars: Vec<ScalarSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ScalarSummary> {
        self.scalars.iter().find(|s| s.name == name)
    }
}

/// Every scalar of a mixture with a 1-based name: `pi[g]`, `mu[g][j]`,
/// `alpha[g][j]`, `sigma[g][j,k]` (upper triangle).
pub fn flatten_params(params: &MixtureParams) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (g, w) in params.weights().iter().enumerate() {
        out.push((format!("pi[{}]", g + 1), *w));
    }
    for (g, c) in params.components().iter().enumerate() {
        for (j, v) in c.mu().iter().enumerate() {
            out.push((format!("mu[{}][{}]", g + 1, j + 1), *v));
        }
        for (j, v) in c.alpha().iter().enumerate() {
            out.push((format!("alpha[{}][{}]", g + 1, j + 1), *v));
        }
        let s = c.sigma().matrix();
        for j in 0..c.dim() {
            for k in j..c.dim() {
                out.push((format!("sigma[{}][{},{}]", g + 1, j + 1, k + 1), s[(j, k)]));
            }
        }
    }
    out
}

/// Means, standard deviations and 2.5%/97.5% type-7 percentile intervals of
/// every scalar over already relabelled samples.
pub fn summarize(samples: &[MixtureParams]) -> Result<PosteriorSummary> {
    if samples.len() < 2 {
        return Err(Error::Domain("posterior summaries need at least two samples".into()));
    }
    let g = samples[0].g();
    if samples.iter().any(|s| s.g() != g) {
        return Err(Error::Shape {
            expected: g,
            found: samples.iter().map(MixtureParams::g).find(|&h| h != g).unwrap_or(g),
        });
    }
    let flat: Vec<Vec<(String, f64)>> = samples.iter().map(flatten_params).collect();
    let n = samples.len() as f64;
    let scalars = (0..flat[0].len())
        .map(|k| {
            let mut xs: Vec<f64> = flat.iter().map(|f| f[k].1).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
            xs.sort_by(f64::total_cmp);
            ScalarSummary {
                name: flat[0][k].0.clone(),
                mean,
                sd,
                lower: quantile_type7(&xs, 0.025),
                upper: quantile_type7(&xs, 0.975),
            }
        })
        .collect();
    Ok(PosteriorSummary {
        n_samples: samples.len(),
        interval_level: 0.95,
        scalars,
    })
}

/// Elementwise average of samples that share a labelling.
pub fn average_params(samples: &[MixtureParams]) -> Result<MixtureParams> {
    use crate::distributions::SalParams;
    use crate::numerics::SpdMatrix;
    let first = samples.first().ok_or_else(|| Error::Domain("no samples to average".into()))?;
    let (g, p) = (first.g(), first.p());
    let n = samples.len() as f64;
    let mut weights = vec![0.0; g];
    let mut comps = Vec::with_capacity(g);
    for k in 0..g {
        let mut mu = vec![0.0; p];
        let mut alpha = vec![0.0; p];
        let mut sigma = nalgebra::DMatrix::<f64>::zeros(p, p);
        for s in samples {
            weights[k] += s.weights()[k] / n;
            let c = s.component(k);
            mu.iter_mut().zip(c.mu()).for_each(|(a, b)| *a += b / n);
            alpha.iter_mut().zip(c.alpha()).for_each(|(a, b)| *a += b / n);
            sigma += c.sigma().matrix() / n;
        }
        comps.push(SalParams::new(mu, alpha, SpdMatrix::new(crate::numerics::symmetrize(&sigma))?)?);
    }
    MixtureParams::normalized(weights, comps)
}
