//! Plain-text tables for the terminal and TSV files.

use salmix::fit::RangeFit;
use salmix::mixture::MixtureParams;
use salmix::simulate::StudyReport;
use std::fmt::Write;

fn vector(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", cells.join(", "))
}

pub fn params(p: &MixtureParams) -> String {
    let mut out = String::new();
    for (k, (w, c)) in p.weights().iter().zip(p.components()).enumerate() {
        let s = c.sigma().matrix();
        let rows: Vec<String> = (0..c.dim())
            .map(|i| vector(&(0..c.dim()).map(|j| s[(i, j)]).collect::<Vec<_>>()))
            .collect();
        let _ = writeln!(out, "  component {}: pi = {w:.4}", k + 1);
        let _ = writeln!(out, "    mu    = {}", vector(c.mu()));
        let _ = writeln!(out, "    alpha = {}", vector(c.alpha()));
        let _ = writeln!(out, "    sigma = [{}]", rows.join(", "));
    }
    out
}

pub fn scores_tsv(range: &RangeFit) -> String {
    let mut out = String::from("g\tloglik\tn_free_params\tbic\ticl\tconverged\terror\n");
    for e in &range.entries {
        match &e.fit {
            Some(f) => {
                let s = &f.score;
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}\t", e.g, s.loglik, s.n_free_params, s.bic, s.icl, f.converged);
            }
            None => {
                let _ = writeln!(out, "{}\t\t\t\t\t\t{}", e.g, e.error.as_deref().unwrap_or(""));
            }
        }
    }
    out
}

pub fn scores_table(range: &RangeFit) -> String {
    let mut out = format!("{:>3}  {:>12}  {:>12}  {:>12}  {:>9}\n", "G", "loglik", "BIC", "ICL", "converged");
    for e in &range.entries {
        let mark = |best: Option<usize>| if best == Some(e.g) { "*" } else { " " };
        match &e.fit {
            Some(f) => {
                let s = &f.score;
                let _ = writeln!(
                    out,
                    "{:>3}  {:>12.3}  {:>11.3}{}  {:>11.3}{}  {:>9}",
                    e.g,
                    s.loglik,
                    s.bic,
                    mark(range.best_bic),
                    s.icl,
                    mark(range.best_icl),
                    if f.converged { "yes" } else { "no" }
                );
            }
            None => {
                let _ = writeln!(out, "{:>3}  failed: {}", e.g, e.error.as_deref().unwrap_or("unknown error"));
            }
        }
    }
    out
}

pub fn recovery_tsv(report: &StudyReport) -> String {
    let mut out = String::from("parameter\ttruth");
    for e in &report.engines {
        let _ = write!(out, "\t{0}_mean\t{0}_sd\t{0}_n", e.engine);
    }
    out.push('\n');
    let Some(first) = report.engines.first() else {
        return out;
    };
    for (j, row) in first.recovery.iter().enumerate() {
        let _ = write!(out, "{}\t{}", row.name, row.truth);
        for e in &report.engines {
            let m = &e.recovery[j].estimate;
            let _ = write!(out, "\t{}\t{}\t{}", m.mean, m.sd, m.n);
        }
        out.push('\n');
    }
    out
}

pub fn recovery_table(report: &StudyReport) -> String {
    let mut out = format!("{:<16} {:>8}", "parameter", "truth");
    for e in &report.engines {
        let _ = write!(out, " {:>18}", format!("{} mean (sd)", e.engine));
    }
    out.push('\n');
    let Some(first) = report.engines.first() else {
        return out;
    };
    for (j, row) in first.recovery.iter().enumerate() {
        let _ = write!(out, "{:<16} {:>8.3}", row.name, row.truth);
        for e in &report.engines {
            let m = &e.recovery[j].estimate;
            let _ = write!(out, " {:>18}", format!("{:.3} ({:.3})", m.mean, m.sd));
        }
        out.push('\n');
    }
    out
}

pub fn selection_tsv(report: &StudyReport) -> String {
    let mut out = String::from(
        "engine\ttrue_g\tn_datasets\tskipped\tcorrect_bic\tcorrect_icl\tari_bic_mean\tari_bic_sd\tari_icl_mean\tari_icl_sd\tseconds_mean\n",
    );
    let g = report.scenario.truth.g();
    for e in &report.engines {
        let _ = writeln!(
            out,
            "{}\t{g}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.engine,
            e.datasets.len(),
            e.skipped,
            e.correct_bic,
            e.correct_icl,
            e.ari_bic.mean,
            e.ari_bic.sd,
            e.ari_icl.mean,
            e.ari_icl.sd,
            e.seconds.mean
        );
    }
    out
}

pub fn selection_table(report: &StudyReport) -> String {
    let mut out = format!(
        "{:<6} {:>8} {:>12} {:>12} {:>16} {:>16} {:>10}\n",
        "engine", "skipped", "correct BIC", "correct ICL", "ARI BIC (sd)", "ARI ICL (sd)", "s/dataset"
    );
    for e in &report.engines {
        let n = e.datasets.len();
        let _ = writeln!(
            out,
            "{:<6} {:>8} {:>12} {:>12} {:>16} {:>16} {:>10.2}",
            e.engine.name(),
            e.skipped,
            format!("{}/{n}", e.correct_bic),
            format!("{}/{n}", e.correct_icl),
            format!("{:.3} ({:.3})", e.ari_bic.mean, e.ari_bic.sd),
            format!("{:.3} ({:.3})", e.ari_icl.mean, e.ari_icl.sd),
            e.seconds.mean
        );
    }
    out
}

pub fn crosstab(table: &[Vec<usize>], classes: &[String]) -> String {
    let k = table.iter().map(Vec::len).max().unwrap_or(0);
    let width = classes.iter().map(String::len).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}", "truth");
    for j in 0..k {
        let _ = write!(out, " {:>6}", format!("g{}", j + 1));
    }
    out.push('\n');
    for (i, row) in table.iter().enumerate() {
        let _ = write!(out, "{:<width$}", classes.get(i).map_or("?", String::as_str));
        for j in 0..k {
            let _ = write!(out, " {:>6}", row.get(j).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}
