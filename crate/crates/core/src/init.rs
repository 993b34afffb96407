//! Starting partitions and the parameters derived from them.

use crate::distributions::SalParams;
use crate::error::{Error, Result};
use crate::mixture::MixtureParams;
use crate::numerics::{DataMatrix, SpdMatrix};
use rand::Rng;

const LLOYD_MAX_ITERS: usize = 100;

/// Initial skewness assigned to every component.
pub const INITIAL_SKEWNESS: f64 = 0.05;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(k, c)| (k, sq_dist(x, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// k-means++ seeding followed by at most 100 Lloyd iterations. A cluster
/// that empties is reseeded at the point farthest from its current center.
pub fn kmeans<R: Rng + ?Sized>(data: &DataMatrix, g: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = data.nrows();
    if g == 0 || g > n {
        return Err(Error::Config(format!("cannot form {g} clusters from {n} observations")));
    }
    let mut centers: Vec<Vec<f64>> = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = data.rows().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < g {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(data.row(next).to_vec());
        for (i, x) in data.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, centers.last().unwrap()));
        }
    }

    let p = data.ncols();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITERS {
        let mut changed = false;
        for (i, x) in data.rows().enumerate() {
            let (k, _) = nearest(x, &centers);
            if labels[i] != k {
                labels[i] = k;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; p]; g];
        let mut counts = vec![0usize; g];
        for (i, x) in data.rows().enumerate() {
            counts[labels[i]] += 1;
            sums[labels[i]].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        for k in 0..g {
            if counts[k] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(data.row(a), &centers[labels[a]]).total_cmp(&sq_dist(data.row(b), &centers[labels[b]]))
                    })
                    .expect("n > 0");
                centers[k] = data.row(far).to_vec();
                labels[far] = k;
                changed = true;
            } else {
                centers[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    // duplicated points can leave tied centers; hand each empty cluster a
    // member of the largest one
    loop {
        let mut counts = vec![0usize; g];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
        let largest = (0..g).max_by_key(|&k| counts[k]).expect("g > 0");
        let donor = (0..n).rev().find(|&i| labels[i] == largest).expect("largest cluster is non-empty");
        labels[donor] = empty;
    }
    Ok(labels)
}

/// Uniformly random labels with every cluster non-empty.
pub fn random_partition<R: Rng + ?Sized>(n: usize, g: usize, rng: &mut R) -> Result<Vec<usize>> {
    if g == 0 || g > n {
        return Err(Error::Config(format!("cannot form {g} clusters from {n} observations")));
    }
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..g)).collect();
    // pin one distinct observation to each cluster
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..g {
        let j = rng.random_range(k..n);
        idx.swap(k, j);
        labels[idx[k]] = k;
    }
    Ok(labels)
}

/// Mixture parameters of a hard partition: cluster proportions, cluster
/// means as locations, skewness `0.05·1` and cluster covariances. Clusters
/// too small for a full-rank covariance borrow the overall covariance.
pub fn params_from_partition(data: &DataMatrix, labels: &[usize], g: usize) -> Result<MixtureParams> {
    let (n, p) = (data.nrows(), data.ncols());
    if labels.len() != n {
        return Err(Error::Shape {
            expected: n,
            found: labels.len(),
        });
    }
    let overall = SpdMatrix::from_row_slice(p, &data.covariance())
        .map_err(|_| Error::Data("data covariance is singular".into()))?;
    let mut weights = Vec::with_capacity(g);
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
        if idx.is_empty() {
            return Err(Error::EmptyComponent { component: k });
        }
        let sub = data.select_rows(&idx);
        let sigma = if idx.len() > p {
            SpdMatrix::from_row_slice(p, &sub.covariance()).unwrap_or_else(|_| overall.clone())
        } else {
            overall.clone()
        };
        weights.push(idx.len() as f64 / n as f64);
        components.push(SalParams::new(sub.column_means(), vec![INITIAL_SKEWNESS; p], sigma)?);
    }
    MixtureParams::normalized(weights, components)
}
