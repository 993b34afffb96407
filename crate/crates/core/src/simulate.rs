//! Simulating from a mixture and running replicated simulation studies.

use crate::diagnostics::{best_permutation, flatten_params};
use crate::distributions::SalParams;
use crate::error::{Error, Result};
use crate::fit::{fit_range, Engine, FitConfig, RangeFit, RangeOptions};
use crate::mixture::MixtureParams;
use crate::numerics::{DataMatrix, SpdMatrix};
use crate::seeds::{derive, roles, stream_id, substream};
use crate::selection::{ari, Criterion, FitScore};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;
use std::time::Instant;

/// `n` rows from the mixture together with the generating component of each.
pub fn rmsal<R: Rng + ?Sized>(params: &MixtureParams, n: usize, rng: &mut R) -> (DataMatrix, Vec<usize>) {
    let weights = params.weights();
    let mut labels = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * params.p());
    for _ in 0..n {
        let mut u = rng.random::<f64>();
        let mut k = 0;
        while k + 1 < weights.len() && u >= weights[k] {
            u -= weights[k];
            k += 1;
        }
        values.extend(params.component(k).sample_with_scale(rng).0);
        labels.push(k);
    }
    let data = DataMatrix::new(n, params.p(), values).expect("rows have the component dimension");
    (data, labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub truth: MixtureParams,
    pub n_per_dataset: usize,
    pub n_datasets: usize,
    pub seed: u64,
}

pub const DEFAULT_N_PER_DATASET: usize = 500;
pub const DEFAULT_N_DATASETS: usize = 10;
pub const DEFAULT_STUDY_SEED: u64 = 20_190_601;

fn sal(mu: &[f64], alpha: &[f64], sigma: &[f64]) -> Result<SalParams> {
    SalParams::new(mu.to_vec(), alpha.to_vec(), SpdMatrix::from_row_slice(mu.len(), sigma)?)
}

impl ScenarioSpec {
    /// The four reference scenarios: two well separated clusters, two
    /// overlapping clusters, three clusters in an inverted trillium, and two
    /// trivariate clusters.
    pub fn builtin(id: u32) -> Result<Self> {
        let (name, truth) = match id {
            1 | 2 => {
                let (m1, m2) = if id == 1 { (5.0, -2.0) } else { (3.0, -1.0) };
                let truth = MixtureParams::new(
                    vec![0.5, 0.5],
                    vec![
                        sal(&[0.0, m1], &[2.0, 2.0], &[1.0, 0.5, 0.5, 1.0])?,
                        sal(&[0.0, m2], &[2.0, 1.0], &[1.0, 0.0, 0.0, 1.0])?,
                    ],
                )?;
                let name = if id == 1 { "scenario-1: two separated clusters" } else { "scenario-2: two overlapping clusters" };
                (name, truth)
            }
            3 => (
                "scenario-3: inverted trillium",
                MixtureParams::new(
                    vec![1.0 / 3.0; 3],
                    vec![
                        sal(&[0.0, 10.0], &[0.0, -3.0], &[1.0, 0.5, 0.5, 1.0])?,
                        sal(&[-10.0, -10.0], &[3.0, 3.0], &[1.0, 0.0, 0.0, 1.0])?,
                        sal(&[10.0, -10.0], &[-3.0, 3.0], &[1.0, 0.25, 0.25, 1.0])?,
                    ],
                )?,
            ),
            4 => (
                "scenario-4: trivariate clusters",
                MixtureParams::new(
                    vec![0.5, 0.5],
                    vec![
                        sal(
                            &[0.0, 0.0, 0.0],
                            &[2.30, 1.79, 0.69],
                            &[6.29, -1.32, 0.68, -1.32, 7.56, -0.04, 0.68, -0.04, 3.89],
                        )?,
                        sal(
                            &[-4.92, 0.24, 4.32],
                            &[-0.60, 1.54, 3.43],
                            &[4.73, -1.41, 0.71, -1.41, 4.63, 0.04, 0.71, 0.04, 1.19],
                        )?,
                    ],
                )?,
            ),
            other => return Err(Error::Config(format!("no built-in scenario {other} (expected 1-4)"))),
        };
        Ok(Self {
            name: name.into(),
            truth,
            n_per_dataset: DEFAULT_N_PER_DATASET,
            n_datasets: DEFAULT_N_DATASETS,
            seed: DEFAULT_STUDY_SEED,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_datasets == 0 {
            return Err(Error::Config("n_datasets must be positive".into()));
        }
        if self.n_per_dataset <= self.truth.p() {
            return Err(Error::Config(format!(
                "n_per_dataset must exceed the dimension {}, got {}",
                self.truth.p(),
                self.n_per_dataset
            )));
        }
        Ok(())
    }

    /// Dataset `index` of the study and its true labels.
    pub fn dataset(&self, index: usize) -> (DataMatrix, Vec<usize>) {
        let seed = self.dataset_seed(index);
        rmsal(&self.truth, self.n_per_dataset, &mut substream(seed, 0))
    }

    fn dataset_seed(&self, index: usize) -> u64 {
        derive(self.seed, stream_id(roles::DATASET, index as u64))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Sample mean and `n - 1` standard deviation (0 for a single value,
    /// all zeros with `n = 0` for none).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, sd }
    }
}

/// One engine on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOutcome {
    pub index: usize,
    pub scores: Vec<FitScore>,
    /// `(G, message)` for fits that failed.
    pub errors: Vec<(usize, String)>,
    pub selected_bic: Option<usize>,
    pub selected_icl: Option<usize>,
    pub ari_bic: Option<f64>,
    pub ari_icl: Option<f64>,
    /// Fit at the true `G`, components permuted to match the truth.
    pub aligned_estimate: Option<MixtureParams>,
    pub converged: Vec<(usize, bool)>,
    pub seconds: f64,
}

impl DatasetOutcome {
    pub fn skipped(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub name: String,
    pub truth: f64,
    pub estimate: MeanSd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineStudy {
    pub engine: Engine,
    pub datasets: Vec<DatasetOutcome>,
    pub ari_bic: MeanSd,
    pub ari_icl: MeanSd,
    pub correct_bic: usize,
    pub correct_icl: usize,
    pub skipped: usize,
    pub recovery: Vec<RecoveryRow>,
    pub seconds: MeanSd,
}

impl EngineStudy {
    pub fn recovery_row(&self, name: &str) -> Option<&RecoveryRow> {
        self.recovery.iter().find(|r| r.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: ScenarioSpec,
    pub g_min: usize,
    pub g_max: usize,
    pub engines: Vec<EngineStudy>,
}

impl StudyReport {
    pub fn engine(&self, engine: Engine) -> Option<&EngineStudy> {
        self.engines.iter().find(|e| e.engine == engine)
    }
}

/// Permutes the components of `estimate` onto those of the truth.
pub fn align_to_truth(estimate: &MixtureParams, truth: &MixtureParams) -> Result<MixtureParams> {
    if estimate.g() != truth.g() || estimate.p() != truth.p() {
        return Err(Error::Shape {
            expected: truth.g(),
            found: estimate.g(),
        });
    }
    Ok(estimate.permuted(&best_permutation(estimate, truth)))
}

fn score_dataset(
    index: usize,
    range: &RangeFit,
    truth_labels: &[usize],
    truth: &MixtureParams,
    seconds: f64,
) -> Result<DatasetOutcome> {
    let ari_for = |c| -> Result<Option<f64>> { range.selected(c).map(|f| ari(truth_labels, &f.labels)).transpose() };
    let aligned_estimate = range.fit_for(truth.g()).map(|f| align_to_truth(&f.params, truth)).transpose()?;
    Ok(DatasetOutcome {
        index,
        scores: range.scores(),
        errors: range
            .entries
            .iter()
            .filter_map(|e| e.error.clone().map(|m| (e.g, m)))
            .collect(),
        selected_bic: range.best_bic,
        selected_icl: range.best_icl,
        ari_bic: ari_for(Criterion::Bic)?,
        ari_icl: ari_for(Criterion::Icl)?,
        aligned_estimate,
        converged: range
            .entries
            .iter()
            .filter_map(|e| e.fit.as_ref().map(|f| (e.g, f.converged)))
            .collect(),
        seconds,
    })
}

fn aggregate(engine: Engine, datasets: Vec<DatasetOutcome>, truth: &MixtureParams) -> EngineStudy {
    let collect = |f: &dyn Fn(&DatasetOutcome) -> Option<f64>| -> Vec<f64> { datasets.iter().filter_map(f).collect() };
    let g = truth.g();
    let truth_flat = flatten_params(truth);
    let estimates: Vec<Vec<(String, f64)>> = datasets
        .iter()
        .filter_map(|d| d.aligned_estimate.as_ref().map(flatten_params))
        .collect();
    let recovery = truth_flat
        .iter()
        .enumerate()
        .map(|(j, (name, t))| RecoveryRow {
            name: name.clone(),
            truth: *t,
            estimate: MeanSd::of(&estimates.iter().map(|e| e[j].1).collect::<Vec<_>>()),
        })
        .collect();
    EngineStudy {
        engine,
        ari_bic: MeanSd::of(&collect(&|d| d.ari_bic)),
        ari_icl: MeanSd::of(&collect(&|d| d.ari_icl)),
        correct_bic: datasets.iter().filter(|d| d.selected_bic == Some(g)).count(),
        correct_icl: datasets.iter().filter(|d| d.selected_icl == Some(g)).count(),
        skipped: datasets.iter().filter(|d| d.skipped()).count(),
        recovery,
        seconds: MeanSd::of(&collect(&|d| (!d.skipped()).then_some(d.seconds))),
        datasets,
    }
}

/// Simulates every dataset of `spec`, fits each engine over `range` without
/// extension, selects by BIC and ICL and scores the selections against the
/// generating labels. Datasets run concurrently; each uses seeds derived
/// from its index, and results are reduced in index order.
pub fn run_study(spec: &ScenarioSpec, engines: &[Engine], range: RangeInclusive<usize>, config: &FitConfig) -> Result<StudyReport> {
    spec.validate()?;
    config.validate()?;
    if *range.start() == 0 || range.is_empty() {
        return Err(Error::Config(format!("invalid component range {}:{}", range.start(), range.end())));
    }
    if engines.is_empty() {
        return Err(Error::Config("no engines selected".into()));
    }
    let options = RangeOptions {
        extend: false,
        max_extra: 0,
    };
    let per_dataset = (0..spec.n_datasets)
        .into_par_iter()
        .map(|d| {
            let (data, labels) = spec.dataset(d);
            let seed = spec.dataset_seed(d);
            engines
                .iter()
                .map(|&engine| {
                    let start = Instant::now();
                    let fit_seed = derive(seed, stream_id(roles::FIT, 1000 + engine.index()));
                    let fits = fit_range(&data, range.clone(), engine, config, fit_seed, &options)?;
                    let seconds = start.elapsed().as_secs_f64();
                    score_dataset(d, &fits, &labels, &spec.truth, seconds)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let engines = engines
        .iter()
        .enumerate()
        .map(|(e, &engine)| {
            let outcomes = per_dataset.iter().map(|d| d[e].clone()).collect();
            aggregate(engine, outcomes, &spec.truth)
        })
        .collect();
    Ok(StudyReport {
        scenario: spec.clone(),
        g_min: *range.start(),
        g_max: *range.end(),
        engines,
    })
}
