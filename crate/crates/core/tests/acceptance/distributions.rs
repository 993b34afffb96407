//! Criterion 6: distribution-level properties, no data needed.

use crate::Outcome;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use salmix::distributions::{GigParams, SalParams};
use salmix::numerics::quadrature::integrate;
use salmix::numerics::SpdMatrix;

fn gig(phi: f64, chi: f64, nu: f64) -> GigParams {
    GigParams::new(phi, chi, nu).unwrap()
}

fn sal(mu: &[f64], alpha: &[f64], sigma: &[f64]) -> SalParams {
    SalParams::new(mu.to_vec(), alpha.to_vec(), SpdMatrix::from_row_slice(mu.len(), sigma).unwrap()).unwrap()
}

/// `∫_0^y f`, integrated on the log scale.
fn gig_cdf(p: &GigParams, y: f64) -> f64 {
    let f = |t: f64| (p.log_density(t.exp()).unwrap() + t).exp();
    let lo = (p.mean().unwrap().ln() - 60.0).min(y.ln() - 1.0);
    integrate(f, lo, y.ln(), 1e-12).value
}

fn gig_mass(p: &GigParams) -> f64 {
    let f = |t: f64| (p.log_density(t.exp()).unwrap() + t).exp();
    let c = p.mean().unwrap().ln();
    integrate(f, c - 60.0, c + 60.0, 1e-13).value
}

/// Kolmogorov-Smirnov distance of sorted `ys` from `cdf`, evaluating the
/// CDF at every `step`-th order statistic. Between checkpoints the empirical
/// CDF moves by at most `step / n`, which is added to the result.
fn ks_sorted(ys: &[f64], step: usize, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = ys.len();
    let mut d: f64 = 0.0;
    for i in (0..n).step_by(step).chain([n - 1]) {
        let f = cdf(ys[i]);
        d = d.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
    }
    d + if step > 1 { step as f64 / n as f64 } else { 0.0 }
}

const GIG_CASES: [(f64, f64, f64); 7] = [
    (1.0, 1.0, 0.5),
    (1.0, 1.0, -0.5),
    (2.0, 30.0, 0.0),
    (2.0, 1.0, 3.5),
    (2.0, 0.001, 0.0),
    (2.5, 0.004, -0.5),
    (1e-3, 5.0, -3.0),
];

pub fn suite(_: &crate::studies::Cache) -> Outcome {
    let mut out = Outcome::new();

    for (phi, chi, nu) in GIG_CASES {
        let mass = gig_mass(&gig(phi, chi, nu));
        out.check((mass - 1.0).abs() < 1e-8, format!("GIG({phi}, {chi}, {nu}) quadrature mass {mass:.12} (tol 1e-8)"));
    }

    for (k, (phi, chi, nu)) in GIG_CASES.into_iter().enumerate() {
        let p = gig(phi, chi, nu);
        let mut rng = ChaCha20Rng::seed_from_u64(600 + k as u64);
        let mut ys: Vec<f64> = (0..100_000).map(|_| p.sample(&mut rng)).collect();
        ys.sort_by(f64::total_cmp);
        let d = ks_sorted(&ys, 50, |y| gig_cdf(&p, y));
        out.check(d < 0.01, format!("GIG({phi}, {chi}, {nu}) sampler KS {d:.4} at 1e5 draws (tol 0.01)"));
    }

    let m = gig(1.0, 1.0, 0.5).mean().unwrap();
    out.check((m - 2.0).abs() < 1e-10, format!("E[Y] for GIG(1, 1, 1/2) = {m:.15} (exact 2, tol 1e-10)"));

    let s = sal(&[0.0], &[0.0], &[1.0]);
    let worst = [-3.0, -0.4, 0.0, 0.25, 1.0, 7.5]
        .iter()
        .map(|&x: &f64| {
            let laplace = (1.0 / 2.0_f64.sqrt()).ln() - 2.0_f64.sqrt() * x.abs();
            (s.log_density(&[x]).unwrap() - laplace).abs()
        })
        .fold(0.0, f64::max);
    out.check(worst < 1e-10, format!("SAL p=1, alpha=0 against the Laplace log-density: max error {worst:.1e} (tol 1e-10)"));

    for (mu, alpha, s2) in [(0.0, 0.0, 1.0), (1.0, 2.0, 0.5), (-2.0, -0.7, 3.0)] {
        let s = sal(&[mu], &[alpha], &[s2]);
        let f = |x: f64| s.log_density(&[x]).unwrap().exp();
        let total = integrate(f, mu - 200.0, mu, 1e-12).value + integrate(f, mu, mu + 200.0, 1e-12).value;
        out.check((total - 1.0).abs() < 1e-6, format!("SAL p=1 ({mu}, {alpha}, {s2}) integrates to {total:.10} (tol 1e-6)"));
    }
    let total = bivariate_mass();
    out.check((total - 1.0).abs() < 1e-2, format!("SAL p=2 importance-sampled mass {total:.4} (tol 1e-2)"));

    let d = slice_ks();
    out.check(d < 0.05, format!("W | X in a slice around x0 against the GIG conditional at x0: KS {d:.4} (tol 0.05)"));
    let d = pit_ks();
    out.check(d < 0.05, format!("conditional CDF of W at joint draws (p=2) against uniform: KS {d:.4} (tol 0.05)"));
    out
}

/// Importance sampling with a bivariate t_3 proposal, whose tails dominate
/// the exponential SAL tails.
fn bivariate_mass() -> f64 {
    use salmix::distributions::correlated_normal;
    let s = sal(&[0.0, 5.0], &[2.0, 2.0], &[1.0, 0.5, 0.5, 1.0]);
    let centre = [2.0, 7.0];
    let scale = SpdMatrix::from_row_slice(2, &[10.0, 9.0, 9.0, 10.0]).unwrap();
    let nu_t = 3.0;
    let log_t = |x: &[f64]| {
        let d = salmix::numerics::mahalanobis(x, &centre, &scale).unwrap();
        // ln Γ(5/2) - ln Γ(3/2) - ln(3π) - ½ ln|S| - (5/2) ln(1 + d/3)
        1.5_f64.ln() - (nu_t * std::f64::consts::PI).ln() - 0.5 * scale.log_det() - 2.5 * (1.0 + d / nu_t).ln()
    };
    let mut rng = ChaCha20Rng::seed_from_u64(621);
    let gamma = rand_distr::Gamma::new(nu_t / 2.0, 2.0).unwrap();
    let n = 200_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let z = correlated_normal(&scale, &mut rng);
        let g: f64 = rand_distr::Distribution::sample(&gamma, &mut rng);
        let k = (nu_t / g).sqrt();
        let x = [centre[0] + k * z[0], centre[1] + k * z[1]];
        sum += (s.log_density(&x).unwrap() - log_t(&x)).exp();
    }
    sum / n as f64
}

/// Joint draws `(X, W)` from a univariate SAL; the `W` of draws with `X`
/// within `h` of `x0` should follow the conditional law at `x0`.
fn slice_ks() -> f64 {
    let s = sal(&[0.0], &[1.0], &[1.0]);
    let (x0, h) = (0.8, 0.01);
    let mut rng = ChaCha20Rng::seed_from_u64(631);
    let mut ws = Vec::new();
    for _ in 0..3_000_000 {
        let (x, w) = s.sample_with_scale(&mut rng);
        if (x[0] - x0).abs() < h {
            ws.push(w);
        }
    }
    ws.sort_by(f64::total_cmp);
    let cond = s.kernel().conditional_scale(&[x0]).unwrap();
    ks_sorted(&ws, 10, |w| gig_cdf(&cond, w))
}

/// Probability-integral transform of every joint draw through its own
/// conditional CDF; exact when the conditional is right.
fn pit_ks() -> f64 {
    let s = sal(&[0.0, 5.0], &[2.0, 2.0], &[1.0, 0.5, 0.5, 1.0]);
    let k = s.kernel();
    let mut rng = ChaCha20Rng::seed_from_u64(641);
    let mut u: Vec<f64> = (0..20_000)
        .map(|_| {
            let (x, w) = s.sample_with_scale(&mut rng);
            gig_cdf(&k.conditional_scale(&x).unwrap(), w)
        })
        .collect();
    u.sort_by(f64::total_cmp);
    ks_sorted(&u, 1, |v| v)
}
