//! Criteria 1-3: replicated simulation studies at desk scale.

use crate::Outcome;
use salmix::fit::{Engine, FitConfig};
use salmix::gibbs::GibbsConfig;
use salmix::simulate::{run_study, ScenarioSpec, StudyReport};
use std::sync::OnceLock;
use std::time::Instant;

/// Sweep cap for every sampler fit in the suite.
pub const SWEEP_BUDGET: usize = 2000;
pub const N_DATASETS: usize = 10;
pub const N_PER_DATASET: usize = 500;

pub fn budget_config() -> FitConfig {
    FitConfig {
        gibbs: GibbsConfig {
            max_sweeps: SWEEP_BUDGET,
            ..GibbsConfig::default()
        },
        ..FitConfig::default()
    }
}

#[derive(Default)]
pub struct Cache {
    studies: [OnceLock<StudyReport>; 4],
}

impl Cache {
    /// Scenario `id` (1-4), both engines, `G = 1..=G_true + 1`.
    pub fn study(&self, id: u32) -> &StudyReport {
        self.studies[id as usize - 1].get_or_init(|| {
            let spec = ScenarioSpec {
                n_datasets: N_DATASETS,
                n_per_dataset: N_PER_DATASET,
                ..ScenarioSpec::builtin(id).unwrap()
            };
            let start = Instant::now();
            let report = run_study(&spec, &Engine::ALL, 1..=spec.truth.g() + 1, &budget_config()).unwrap();
            eprintln!("    (scenario {id} study: {:.0} s)", start.elapsed().as_secs_f64());
            report
        })
    }
}

/// Reference recovery for scenario 1: (name, Bayes mean, Bayes sd, EM mean, EM sd).
const RECOVERY: [(&str, f64, f64, f64, f64); 16] = [
    ("pi[1]", 0.50, 0.02, 0.50, 0.02),
    ("pi[2]", 0.50, 0.02, 0.50, 0.02),
    ("mu[1][1]", -0.016, 0.055, 0.08, 0.10),
    ("mu[1][2]", 4.988, 0.055, 5.08, 0.10),
    ("alpha[1][1]", 2.02, 0.15, 1.93, 0.15),
    ("alpha[1][2]", 2.01, 0.16, 1.93, 0.17),
    ("sigma[1][1,1]", 0.95, 0.19, 1.16, 0.26),
    ("sigma[1][1,2]", 0.45, 0.16, 0.65, 0.25),
    ("sigma[1][2,2]", 0.95, 0.18, 1.14, 0.28),
    ("mu[2][1]", -0.01, 0.07, 0.11, 0.20),
    ("mu[2][2]", -2.01, 0.06, -1.94, 0.11),
    ("alpha[2][1]", 2.03, 0.15, 1.91, 0.24),
    ("alpha[2][2]", 1.01, 0.10, 0.94, 0.13),
    ("sigma[2][1,1]", 0.98, 0.20, 1.22, 0.48),
    ("sigma[2][1,2]", -0.00, 0.13, 0.13, 0.24),
    ("sigma[2][2,2]", 1.02, 0.14, 1.07, 0.16),
];

pub fn recovery(cache: &Cache) -> Outcome {
    let mut out = Outcome::new();
    let report = cache.study(1);
    let gibbs = report.engine(Engine::Gibbs).unwrap();
    let em = report.engine(Engine::Em).unwrap();
    out.info(format!("{:<14} {:>6} {:>16} {:>16} {:>16}", "parameter", "truth", "gibbs mean (sd)", "em mean (sd)", "table em"));
    for (name, _, b_sd, e_mean, e_sd) in RECOVERY {
        let g = gibbs.recovery_row(name).unwrap();
        let e = em.recovery_row(name).unwrap();
        // Gibbs against the truth in Bayes-column sds, EM against the EM column
        let g_ok = g.estimate.n > 0 && (g.estimate.mean - g.truth).abs() <= 3.0 * b_sd;
        let e_ok = e.estimate.n > 0 && (e.estimate.mean - e_mean).abs() <= 3.0 * e_sd;
        out.check(
            g_ok && e_ok,
            format!(
                "{name:<14} {:>6.2} {:>16} {:>16} {:>16}  |gibbs-truth| {:.3} <= {:.3}, |em-table| {:.3} <= {:.3}",
                g.truth,
                format!("{:.3} ({:.3})", g.estimate.mean, g.estimate.sd),
                format!("{:.3} ({:.3})", e.estimate.mean, e.estimate.sd),
                format!("{e_mean:.3} ({e_sd:.2})"),
                (g.estimate.mean - g.truth).abs(),
                3.0 * b_sd,
                (e.estimate.mean - e_mean).abs(),
                3.0 * e_sd
            ),
        );
    }
    out.info(format!(
        "datasets with a G = 2 fit: gibbs {}/{N_DATASETS}, em {}/{N_DATASETS}",
        gibbs.recovery[0].estimate.n, em.recovery[0].estimate.n
    ));
    out
}

pub fn classification(cache: &Cache) -> Outcome {
    let mut out = Outcome::new();
    // (scenario, engine, lower bound, upper bound)
    let bounds = [
        (1, Engine::Gibbs, 0.97, 1.0),
        (1, Engine::Em, 0.97, 1.0),
        (2, Engine::Gibbs, 0.93, 1.0),
        (3, Engine::Gibbs, 0.85, 0.92),
        (3, Engine::Em, 0.85, 0.92),
    ];
    for (id, engine, lo, hi) in bounds {
        let e = cache.study(id).engine(engine).unwrap();
        for (crit, ari) in [("BIC", &e.ari_bic), ("ICL", &e.ari_icl)] {
            out.check(
                ari.n > 0 && ari.mean >= lo && ari.mean <= hi,
                format!("scenario {id} {engine:<5} {crit} mean ARI {:.3} (sd {:.3}, n {}) in [{lo}, {hi}]", ari.mean, ari.sd, ari.n),
            );
        }
    }
    for id in [2, 4] {
        let e = cache.study(id).engine(Engine::Em).unwrap();
        let g = cache.study(id).engine(Engine::Gibbs).unwrap();
        out.info(format!(
            "scenario {id}: em ARI BIC {:.3} ICL {:.3}; gibbs ARI BIC {:.3} ICL {:.3} (not gated)",
            e.ari_bic.mean, e.ari_icl.mean, g.ari_bic.mean, g.ari_icl.mean
        ));
    }
    out
}

pub fn selection(cache: &Cache) -> Outcome {
    let mut out = Outcome::new();
    for id in 1..=4 {
        let report = cache.study(id);
        let g = report.engine(Engine::Gibbs).unwrap();
        out.check(
            g.correct_bic >= 9 && g.correct_icl >= 9,
            format!("scenario {id} gibbs correct G: BIC {}/{N_DATASETS}, ICL {}/{N_DATASETS} (need >= 9)", g.correct_bic, g.correct_icl),
        );
    }
    let em2 = cache.study(2).engine(Engine::Em).unwrap();
    out.check(
        em2.correct_bic <= 7 && em2.correct_icl <= 7,
        format!("scenario 2 em correct G: BIC {}/{N_DATASETS}, ICL {}/{N_DATASETS} (need <= 7)", em2.correct_bic, em2.correct_icl),
    );
    for id in 1..=4 {
        let report = cache.study(id);
        let g = report.engine(Engine::Gibbs).unwrap();
        let e = report.engine(Engine::Em).unwrap();
        out.info(format!(
            "scenario {id}: em correct BIC {} ICL {}; seconds per dataset gibbs {:.1}, em {:.2}, ratio {:.0}; skipped gibbs {} em {}",
            e.correct_bic,
            e.correct_icl,
            g.seconds.mean,
            e.seconds.mean,
            g.seconds.mean / e.seconds.mean.max(1e-9),
            g.skipped,
            e.skipped
        ));
        let unconverged: usize = g
            .datasets
            .iter()
            .map(|d| d.converged.iter().filter(|(_, c)| !c).count())
            .sum();
        out.info(format!("scenario {id}: gibbs fits without PSRF convergence inside the budget: {unconverged}"));
    }
    out
}
