use crate::diagnostics::PosteriorSummary;
use crate::error::{Error, Result};
use crate::fit::{FitDetail, RangeFit};
use crate::gibbs::ChainRun;
use crate::mixture::MixtureParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Version of the results layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

/// Every results file is an envelope naming its schema version and kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub tool_version: String,
    pub body: T,
}

/// Writes `contents` to a temporary file beside `path` and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty-printed JSON. Floats are written in shortest round-trip form, so
/// every number reloads bit for bit.
pub fn save_results<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        body,
    };
    let mut text = serde_json::to_vec_pretty(&env)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

/// Loads a file written by [`save_results`], checking the schema version
/// before the body is interpreted.
pub fn load_results<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Data(format!("{}: not a results file (no schema_version)", path.display())))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaVersion {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        });
    }
    let env: Envelope<T> = serde_json::from_value(value)?;
    if env.kind != kind {
        return Err(Error::Data(format!("{}: holds `{}` results, expected `{kind}`", path.display(), env.kind)));
    }
    Ok(env.body)
}

/// Keeps sweeps `0, k, 2k, ...` of a chain.
pub fn thin_chain(chain: &ChainRun, k: usize) -> ChainRun {
    let k = k.max(1);
    let pick = |len: usize| (0..len).step_by(k);
    ChainRun {
        seed: chain.seed,
        stream: chain.stream,
        draws: pick(chain.draws.len()).map(|i| chain.draws[i].clone()).collect(),
        loglik: pick(chain.loglik.len()).map(|i| chain.loglik[i]).collect(),
        labels: pick(chain.labels.len()).map(|i| chain.labels[i].clone()).collect(),
        resamples: pick(chain.resamples.len()).map(|i| chain.resamples[i]).collect(),
        longest_empty_run: chain.longest_empty_run.clone(),
    }
}

/// How much of each chain to keep in a results file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKeep {
    /// Every `k`-th sweep.
    Thin(usize),
    /// Log-likelihood traces only; per-sweep draws and labels are dropped.
    LoglikOnly,
}

/// Applies `keep` to the chains of every sampler fit in `range`.
pub fn trim_traces(range: &mut RangeFit, keep: TraceKeep) {
    for entry in &mut range.entries {
        if let Some(FitDetail::Gibbs(g)) = entry.fit.as_mut().map(|f| &mut f.detail) {
            for chain in &mut g.chains {
                *chain = match keep {
                    TraceKeep::Thin(k) => thin_chain(chain, k),
                    TraceKeep::LoglikOnly => ChainRun {
                        draws: Vec::new(),
                        labels: Vec::new(),
                        ..chain.clone()
                    },
                };
            }
        }
    }
}

/// Mixture log-density on a rectangular lattice over the first two
/// coordinates. Points on a component location, where the density is
/// unbounded, hold `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `log_density[iy][ix]`
    pub log_density: Vec<Vec<f64>>,
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn density_grid(params: &MixtureParams, x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<DensityGrid> {
    if params.p() != 2 {
        return Err(Error::Domain(format!("contour grids need two-dimensional fits, got p = {}", params.p())));
    }
    if nx == 0 || ny == 0 || !(x.0 < x.1) || !(y.0 < y.1) {
        return Err(Error::Domain("grid needs a positive number of points on non-empty ranges".into()));
    }
    let (xs, ys) = (lattice(x.0, x.1, nx), lattice(y.0, y.1, ny));
    let log_density = ys
        .iter()
        .map(|&b| {
            xs.iter()
                .map(|&a| mixture_point_log_density(params, &[a, b]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DensityGrid { xs, ys, log_density })
}

fn mixture_point_log_density(params: &MixtureParams, x: &[f64]) -> Result<f64> {
    let mut terms = Vec::with_capacity(params.g());
    for (w, c) in params.weights().iter().zip(params.components()) {
        match c.log_density(x) {
            Ok(l) => terms.push(w.ln() + l),
            Err(Error::UnboundedDensity) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(crate::numerics::log_sum_exp(&terms))
}

impl DensityGrid {
    /// One `x  y  log_density  density` line per lattice point.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("x\ty\tlog_density\tdensity\n");
        for (iy, &b) in self.ys.iter().enumerate() {
            for (ix, &a) in self.xs.iter().enumerate() {
                let l = self.log_density[iy][ix];
                out.push_str(&format!("{a}\t{b}\t{l}\t{}\n", l.exp()));
            }
        }
        out
    }
}

/// Posterior means and interval endpoints, one scalar per line.
pub fn summary_tsv(summary: &PosteriorSummary) -> String {
    let mut out = format!("name\tmean\tsd\tlower_{0}\tupper_{0}\n", summary.interval_level);
    for s in &summary.scalars {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", s.name, s.mean, s.sd, s.lower, s.upper));
    }
    out
}
