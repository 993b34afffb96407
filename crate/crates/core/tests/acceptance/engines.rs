//! Criteria 4 and 7: Old Faithful and engine cross-validation.

use crate::studies::budget_config;
use crate::Outcome;
use salmix::distributions::SalParams;
use salmix::em::{m_step, run_em, EmConfig};
use salmix::fit::{fit_range, Engine, RangeOptions};
use salmix::gibbs::{draw_component_params, update_hypers, ComponentPrior};
use salmix::init::kmeans;
use salmix::io::{load_csv, standardize, CsvOptions};
use salmix::mixture::{accumulate_stats_hard, ScaleMoments};
use salmix::numerics::{DataMatrix, SpdMatrix};
use salmix::seeds::substream;
use salmix::selection::ari;
use salmix::simulate::ScenarioSpec;
use serde_json::Value;
use std::path::Path;

type Estimates = (f64, [f64; 2], [f64; 2], [f64; 3]);

/// Reference EM estimates for the two components, in printed order: pi, mu, alpha, upper
/// triangle of Sigma.
const FAITHFUL_EM: [Estimates; 2] = [
    (0.64, [0.89, 0.77], [0.21, 0.11], [0.15, 0.06, 0.25]),
    (0.35, [-1.48, -1.32], [-0.20, -0.12], [0.03, 0.01, 0.25]),
];

pub fn faithful(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/faithful.csv");
    let raw = load_csv(&path, &CsvOptions::default()).unwrap();
    let (data, _) = standardize(&raw).unwrap();
    let config = budget_config();
    let mut fits = Vec::new();
    for engine in Engine::ALL {
        let r = fit_range(&data.values, 1..=3, engine, &config, 1, &RangeOptions::default()).unwrap();
        for e in &r.entries {
            if let Some(f) = &e.fit {
                out.info(format!(
                    "{engine:<5} G = {}: BIC {:.2}, ICL {:.2}, converged {}",
                    e.g, f.score.bic, f.score.icl, f.converged
                ));
            }
        }
        out.check(
            r.best_bic == Some(2) && r.best_icl == Some(2),
            format!("{engine} selects G = 2 by BIC and ICL (got {:?} / {:?})", r.best_bic, r.best_icl),
        );
        fits.push(r);
    }
    let (Some(g2), Some(em2)) = (fits[0].fit_for(2), fits[1].fit_for(2)) else {
        out.check(false, "both engines produced a G = 2 fit".into());
        return out;
    };
    let agreement = ari(&g2.labels, &em2.labels).unwrap();
    out.check(agreement == 1.0, format!("ARI between the G = 2 MAP partitions {agreement:.4} (must be 1.00)"));

    let p = &em2.params;
    // match fitted components to the printed ones by location
    let dist = |k: usize, j: usize| -> f64 {
        let m = p.component(k).mu();
        (m[0] - FAITHFUL_EM[j].1[0]).powi(2) + (m[1] - FAITHFUL_EM[j].1[1]).powi(2)
    };
    let order = if dist(0, 0) + dist(1, 1) <= dist(1, 0) + dist(0, 1) { [0, 1] } else { [1, 0] };
    let entries = |k: usize| -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let c = p.component(k);
        let s = c.sigma().matrix();
        (p.weights()[k], c.mu().to_vec(), c.alpha().to_vec(), vec![s[(0, 0)], s[(0, 1)], s[(1, 1)]])
    };
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut alpha_as_printed = 0.0_f64;
    let mut alpha_swapped = 0.0_f64;
    for (j, &k) in order.iter().enumerate() {
        let (pi, mu, alpha, sigma) = entries(k);
        let (tpi, tmu, talpha, tsigma) = FAITHFUL_EM[j];
        let d = max_diff(&[pi], &[tpi]).max(max_diff(&mu, &tmu)).max(max_diff(&sigma, &tsigma));
        out.check(
            d <= 0.1,
            format!(
                "EM component at mu ({:.2}, {:.2}): pi {:.3}, Sigma [{:.3}, {:.3}, {:.3}]; max |diff| from the table {d:.3} (tol 0.1)",
                mu[0], mu[1], pi, sigma[0], sigma[1], sigma[2]
            ),
        );
        alpha_as_printed = alpha_as_printed.max(max_diff(&alpha, &talpha));
        alpha_swapped = alpha_swapped.max(max_diff(&alpha, &FAITHFUL_EM[1 - j].2));
        out.info(format!("  alpha ({:.3}, {:.3}); printed alongside this mu: ({}, {})", alpha[0], alpha[1], talpha[0], talpha[1]));
    }
    // the reference lists each alpha beside the other component: the sample mean of
    // the cluster at mu = (0.89, 0.77) is near mu + (-0.2, -0.1), not mu + (0.2, 0.1)
    out.check(
        alpha_as_printed.min(alpha_swapped) <= 0.1,
        format!(
            "EM alpha within 0.1 of the table up to component assignment (as printed {alpha_as_printed:.3}, swapped {alpha_swapped:.3})"
        ),
    );
    out
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn column(v: &[f64]) -> DataMatrix {
    DataMatrix::new(v.len(), 1, v.to_vec()).unwrap()
}

pub fn cross_validation(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();
    posterior_means_match_m_step(&mut out);

    let fixture: Value = serde_json::from_str(include_str!("../fixtures/mstep_oracle.json")).unwrap();
    for (c, case) in fixture["cases"].as_array().unwrap().iter().enumerate() {
        let rows: Vec<Vec<f64>> = case["x"].as_array().unwrap().iter().map(floats).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let moments = ScaleMoments {
            z: column(&floats(&case["z"])),
            a: column(&floats(&case["a"])),
            b: column(&floats(&case["b"])),
        };
        let comp = m_step(&data, &moments).unwrap().component(0).clone();
        let sigma: Vec<f64> = case["sigma"].as_array().unwrap().iter().flat_map(floats).collect();
        let got: Vec<f64> = comp
            .mu()
            .iter()
            .chain(comp.alpha())
            .copied()
            .chain(comp.sigma().matrix().transpose().as_slice().iter().copied())
            .collect();
        let want: Vec<f64> = floats(&case["mu"]).into_iter().chain(floats(&case["alpha"])).chain(sigma).collect();
        let d = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.check(d < 1e-4, format!("M-step vs numerical maximiser, case {c} (n = {}): max |diff| {d:.1e} (tol 1e-4)", data.nrows()));
    }

    let mut worst_drop = 0.0_f64;
    let mut steps = 0;
    let mut setbacks = 0;
    let mut worst_after = 0.0_f64;
    for seed in 0..50_u64 {
        let spec = ScenarioSpec {
            n_per_dataset: 200,
            seed,
            ..ScenarioSpec::builtin(1 + (seed % 4) as u32).unwrap()
        };
        let (data, _) = spec.dataset(0);
        let g = spec.truth.g();
        let init = kmeans(&data, g, &mut substream(seed, 1)).unwrap();
        let r = run_em(&data, g, &init, &EmConfig::default(), seed).unwrap();
        let end = r.setback_iteration.unwrap_or(r.loglik_trace.len() - 1);
        setbacks += usize::from(r.setback_iteration.is_some());
        for w in r.loglik_trace[..=end].windows(2) {
            worst_drop = worst_drop.max((w[0] - w[1]) / w[0].abs().max(1.0));
            steps += 1;
        }
        if end + 2 < r.loglik_trace.len() {
            for w in r.loglik_trace[end + 1..].windows(2) {
                worst_after = worst_after.max((w[0] - w[1]) / w[0].abs().max(1.0));
            }
        }
    }
    out.check(
        worst_drop <= 1e-9,
        format!("EM log-likelihood nondecreasing before set-back on 50 runs ({steps} steps, {setbacks} runs with set-back): largest relative drop {worst_drop:.1e} (tol 1e-9)"),
    );
    out.info(format!("after the set-back step, with locations held fixed: largest relative drop {worst_after:.1e}"));
    out
}

/// With a flat prior and fixed labels and scales, posterior draws of
/// `(mu, alpha, Sigma^-1)` average to the M-step values.
fn posterior_means_match_m_step(out: &mut Outcome) {
    let comps = [
        SalParams::new(vec![0.0, 5.0], vec![2.0, 2.0], SpdMatrix::from_row_slice(2, &[1.0, 0.5, 0.5, 1.0]).unwrap()).unwrap(),
        SalParams::new(vec![0.0, -2.0], vec![2.0, 1.0], SpdMatrix::identity(2)).unwrap(),
    ];
    let (n, g) = (300, 2);
    let mut rng = substream(701, 0);
    let mut rows = Vec::new();
    let mut w = Vec::new();
    let labels: Vec<usize> = (0..n).map(|i| i % g).collect();
    for &k in &labels {
        let (x, wi) = comps[k].sample_with_scale(&mut rng);
        rows.push(x);
        w.push(wi);
    }
    let data = DataMatrix::from_rows(&rows).unwrap();
    let mut z = vec![0.0; n * g];
    let mut a = vec![0.0; n * g];
    let mut b = vec![0.0; n * g];
    for i in 0..n {
        z[i * g + labels[i]] = 1.0;
        for k in 0..g {
            a[i * g + k] = w[i];
            b[i * g + k] = 1.0 / w[i];
        }
    }
    let (a, b) = (DataMatrix::new(n, g, a).unwrap(), DataMatrix::new(n, g, b).unwrap());
    let em = m_step(&data, &ScaleMoments { z: DataMatrix::new(n, g, z).unwrap(), a: a.clone(), b }).unwrap();
    let stats = accumulate_stats_hard(&data, &labels, &a, g);
    let draws = 100_000;
    for (k, s) in stats.iter().enumerate() {
        let post = update_hypers(&ComponentPrior::flat(2), s, k).unwrap();
        let target = em.component(k);
        let target_prec = target.sigma().inverse().unwrap();
        let scalars = |s: &SalParams, prec: &SpdMatrix| -> Vec<f64> {
            let m = prec.matrix();
            vec![s.mu()[0], s.mu()[1], s.alpha()[0], s.alpha()[1], m[(0, 0)], m[(0, 1)], m[(1, 1)]]
        };
        let want = scalars(target, &target_prec);
        let (mut sum, mut sum_sq) = (vec![0.0; 7], vec![0.0; 7]);
        let mut rng = substream(702, k as u64);
        for _ in 0..draws {
            let d = draw_component_params(&post, &mut rng).unwrap();
            let v = scalars(&d, &d.sigma().inverse().unwrap());
            for j in 0..7 {
                sum[j] += v[j];
                sum_sq[j] += v[j] * v[j];
            }
        }
        let names = ["mu1", "mu2", "alpha1", "alpha2", "prec11", "prec12", "prec22"];
        let mut worst: f64 = 0.0;
        for j in 0..7 {
            let mean = sum[j] / draws as f64;
            let se = ((sum_sq[j] / draws as f64 - mean * mean) / draws as f64).sqrt();
            let z = (mean - want[j]).abs() / se;
            worst = worst.max(z);
            if z > 4.0 {
                out.info(format!("  component {} {}: draw mean {mean:.5} vs M-step {:.5}", k + 1, names[j], want[j]));
            }
        }
        out.check(
            worst < 4.0,
            format!("component {}: zero-prior posterior means of mu, alpha, Sigma^-1 vs M-step over 1e5 draws: worst |z| {worst:.2} (tol 4 MC se)", k + 1),
        );
    }
}
