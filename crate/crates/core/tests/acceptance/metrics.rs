//! Criteria 5, 8 and 9: the yeast stand-in, diagnostics and metrics.

use crate::studies::budget_config;
use crate::{Outcome, Status};
use rand::Rng;
use salmix::diagnostics::{psrf, relabel, relabel_to_reference};
use salmix::distributions::SalParams;
use salmix::fit::{fit_model, fit_range, Engine, RangeOptions};
use salmix::gibbs::{run_chains, GibbsConfig, PriorHyper};
use salmix::mixture::MixtureParams;
use salmix::numerics::{DataMatrix, SpdMatrix};
use salmix::seeds::substream;
use salmix::selection::{ari, bic, classification_report, count_free_params, icl, RhoConvention};
use salmix::simulate::{rmsal, ScenarioSpec};

fn sal(mu: &[f64], alpha: &[f64], sigma: &[f64]) -> SalParams {
    SalParams::new(mu.to_vec(), alpha.to_vec(), SpdMatrix::from_row_slice(mu.len(), sigma).unwrap()).unwrap()
}

/// Labels reproducing a contingency table, rows as truth.
fn labels_from_table(table: &[[usize; 2]; 2]) -> (Vec<usize>, Vec<usize>) {
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            truth.extend(std::iter::repeat_n(i, c));
            pred.extend(std::iter::repeat_n(j, c));
        }
    }
    (truth, pred)
}

/// The 626-row yeast subset is not available offline, so the criterion is
/// reported as downgraded and replaced by properties that hold on any
/// two-class extraction of its shape.
pub fn yeast(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();
    out.info("the 626-row CYT/ME3 subset could not be obtained; running the property suite instead".into());

    // reference classification tables; ARIs from scikit-learn on the same counts
    for (engine, table, oracle) in [
        ("gibbs", [[454, 9], [20, 143]], 0.811_665_911_557_040_6),
        ("em", [[449, 14], [15, 148]], 0.813_114_826_503_339_5),
    ] {
        let (t, p) = labels_from_table(&table);
        let r = classification_report(&t, &p).unwrap();
        out.check(
            (r.ari - oracle).abs() < 1e-12 && (r.ari * 100.0).round() == 81.0,
            format!("{engine} reference table: ARI {:.6} (reported 0.81), hit rate {:.4}", r.ari, r.hit_rate),
        );
    }

    // synthetic stand-in: 463 CYT-like and 163 ME3-like rows on three unit-range scores
    let truth = MixtureParams::new(
        vec![463.0 / 626.0, 163.0 / 626.0],
        vec![
            sal(&[0.45, 0.52, 0.47], &[0.03, -0.02, 0.02], &[0.010, 0.002, 0.0, 0.002, 0.008, 0.0, 0.0, 0.0, 0.004]),
            sal(&[0.45, 0.30, 0.49], &[0.04, -0.03, 0.02], &[0.010, 0.001, 0.0, 0.001, 0.006, 0.0, 0.0, 0.0, 0.004]),
        ],
    )
    .unwrap();
    let (data, labels) = rmsal(&truth, 626, &mut substream(501, 0));
    let config = budget_config();
    let gibbs = fit_model(&data, 2, Engine::Gibbs, &config, 502).unwrap();
    let r = classification_report(&labels, &gibbs.labels).unwrap();
    let total: usize = r.table.iter().flatten().sum();
    out.check(
        total == 626 && r.ari.is_finite() && r.ari <= 1.0 && (0.0..=1.0).contains(&r.hit_rate),
        format!("2-component gibbs on the stand-in: table total {total}, ARI {:.3}, hit rate {:.3}", r.ari, r.hit_rate),
    );
    out.info(format!("stand-in ARI {:.3} (the real-data band [0.75, 0.87] is not gated on synthetic data)", r.ari));
    for engine in Engine::ALL {
        let range = fit_range(&data, 1..=4, engine, &config, 503, &RangeOptions { extend: false, max_extra: 0 }).unwrap();
        let ok = range.entries.iter().all(|e| e.fit.as_ref().is_some_and(|f| f.score.icl <= f.score.bic));
        out.check(
            ok,
            format!(
                "{engine} G = 1..4 on the stand-in: every G fitted with ICL <= BIC; BIC selects {:?}, ICL selects {:?}",
                range.best_bic, range.best_icl
            ),
        );
    }
    if out.status == Status::Pass {
        out.status = Status::Downgraded;
    }
    out
}

pub fn diagnostics(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();
    let mut rng = substream(801, 0);
    let n = 2000;
    let noise: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let r = psrf(&[&noise, &noise, &noise]).unwrap();
    // identical chains: B = 0, so R = sqrt((n - 1) / n)
    let expected = ((n as f64 - 1.0) / n as f64).sqrt();
    out.check(
        (r.rhat - expected).abs() < 1e-12 && (r.rhat - 1.0).abs() < 1e-3,
        format!("identical chains: PSRF {:.6} (= sqrt((n-1)/n) = {expected:.6})", r.rhat),
    );
    let flat = vec![3.0; n];
    let r = psrf(&[&flat, &flat]).unwrap();
    out.check(r.rhat == 1.0, format!("identical constant chains: PSRF {}", r.rhat));
    let offset: Vec<f64> = noise.iter().map(|v| v + 1.0).collect();
    let r = psrf(&[&noise, &offset]).unwrap();
    out.check(r.rhat > 1.1 && !r.converged, format!("chains offset by 1 (within sd 0.29): PSRF {:.3} > 1.1", r.rhat));

    // label-switched copies of one draw, with jittered weights that keep their order
    let base = MixtureParams::new(
        vec![0.2, 0.3, 0.5],
        vec![
            sal(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]),
            sal(&[5.0, 5.0], &[0.0, 1.0], &[1.0, 0.3, 0.3, 1.0]),
            sal(&[-5.0, 5.0], &[-1.0, 0.0], &[2.0, 0.0, 0.0, 0.5]),
        ],
    )
    .unwrap();
    let perms = salmix::diagnostics::permutations(3);
    let draws: Vec<MixtureParams> = (0..300)
        .map(|i| {
            let e = 0.02 * (rng.random::<f64>() - 0.5);
            let w = base.weights();
            let jittered = MixtureParams::normalized(vec![w[0] + e, w[1] - e, w[2]], base.components().to_vec()).unwrap();
            jittered.permuted(&perms[i % perms.len()])
        })
        .collect();
    let sorted = relabel(&draws);
    let ordered = sorted.iter().all(|d| d.weights().windows(2).all(|w| w[0] <= w[1]));
    let carried = sorted.iter().all(|d| d.components() == base.components());
    out.check(ordered && carried, "weight-order relabelling sorts pi and carries each component with its weight".into());
    out.check(relabel(&sorted) == sorted, "weight-order relabelling is idempotent".into());
    let matched = relabel_to_reference(&draws).unwrap();
    let carried = matched.iter().all(|d| d.components() == base.components());
    out.check(carried, "reference relabelling puts every switched draw on one labelling, ascending mean pi".into());
    out.check(relabel_to_reference(&matched).unwrap() == matched, "reference relabelling is idempotent".into());

    let spec = ScenarioSpec {
        n_per_dataset: 200,
        ..ScenarioSpec::builtin(1).unwrap()
    };
    let (data, _) = spec.dataset(0);
    let config = GibbsConfig {
        max_sweeps: 1000,
        ..GibbsConfig::default()
    };
    let fit = run_chains(&data, 2, &PriorHyper::default_for(&data, 2).unwrap(), &config, 802).unwrap();
    out.check(
        fit.retained.len() == 500 && fit.chains.len() == 3,
        format!("retained draws pooled over {} chains: {} (must be 500)", fit.chains.len(), fit.retained.len()),
    );
    out
}

/// Set partitions of `n` items as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=max + 1 {
            cur[i] = v;
            rec(i + 1, max.max(v), cur, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

/// ARI from pair counts, independent of the contingency-table route.
fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (n00 * n11 - n01 * n10) / den
}

pub fn metrics(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();
    for n in 2..=8 {
        let parts = partitions(n);
        let mut worst: f64 = 0.0;
        for a in &parts {
            for b in &parts {
                worst = worst.max((ari(a, b).unwrap() - ari_pairs(a, b)).abs());
            }
        }
        out.check(
            worst < 1e-12,
            format!("ARI vs pair-count oracle on all {0} x {0} partition pairs of n = {n}: max |diff| {worst:.1e}", parts.len()),
        );
    }

    let mut rng = substream(901, 0);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let g = rng.random_range(1..7);
        let mut z = Vec::with_capacity(n * g);
        for _ in 0..n {
            let row: Vec<f64> = (0..g).map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = row.iter().sum::<f64>().max(1e-300);
            z.extend(row.iter().map(|v| v / s));
        }
        let z = DataMatrix::new(n, g, z).unwrap();
        let b = rng.random_range(-5000.0..5000.0);
        if icl(b, &z) > b {
            violations += 1;
        }
    }
    out.check(violations == 0, format!("ICL <= BIC on 1000 random soft matrices: {violations} violations"));
    let hard: Vec<f64> = (0..50).flat_map(|i| [f64::from(i % 3 == 0), f64::from(i % 3 == 1), f64::from(i % 3 == 2)]).collect();
    let gap = icl(-321.5, &DataMatrix::new(50, 3, hard).unwrap()) - -321.5;
    out.check(gap == 0.0, format!("ICL = BIC for one-hot z: difference {gap}"));

    // frozen with an independent Python evaluation of 2 l - rho ln n
    for (loglik, rho, n, want) in [
        (-100.0, 5, 50, -219.560_115_027_140_74),
        (-388.398, 15, 272, -860.883_030_994_44),
        (12.5, 3, 1000, 4.276_734_163_053_589_6),
        (-4096.0, 15, 500, -8_285.219_121_476_333),
    ] {
        let got = bic(loglik, rho, n);
        out.check((got - want).abs() <= 1e-12 * want.abs().max(1.0), format!("BIC({loglik}, rho {rho}, n {n}) = {got}"));
    }
    let counts = [
        (count_free_params(1, 1, RhoConvention::Full), 3),
        (count_free_params(2, 2, RhoConvention::Full), 15),
        (count_free_params(3, 3, RhoConvention::Full), 38),
    ];
    out.check(
        counts.iter().all(|(a, b)| a == b),
        format!("free-parameter counts (G, p) = (1, 1), (2, 2), (3, 3): {:?}", counts.map(|c| c.0)),
    );
    out
}
