//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! The process exits 0 whatever the outcome so that `cargo test` reports the
//! suite rather than aborting on it; set `ACCEPTANCE_STRICT=1` to exit 1 on
//! any FAIL. `ACCEPTANCE_ONLY=6,7` runs a subset.

mod distributions;
mod engines;
mod metrics;
mod studies;

use std::time::Instant;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Downgraded,
}

pub struct Outcome {
    pub status: Status,
    pub lines: Vec<String>,
}

impl Default for Outcome {
    fn default() -> Self {
        Self::new()
    }
}

impl Outcome {
    pub fn new() -> Self {
        Self {
            status: Status::Pass,
            lines: Vec::new(),
        }
    }

    /// Records a named check; any failed check fails the criterion.
    pub fn check(&mut self, ok: bool, line: String) {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    pub fn info(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

type Criterion = (u32, &'static str, fn(&studies::Cache) -> Outcome);

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [Criterion; 9] = [
        (1, "simulation 1 parameter recovery", studies::recovery),
        (2, "classification parity", studies::classification),
        (3, "model-selection reliability", studies::selection),
        (4, "Old Faithful", engines::faithful),
        (5, "yeast subset", metrics::yeast),
        (6, "distribution properties", distributions::suite),
        (7, "engine cross-validation", engines::cross_validation),
        (8, "diagnostics", metrics::diagnostics),
        (9, "metrics", metrics::metrics),
    ];
    let cache = studies::Cache::default();
    let mut summary = Vec::new();
    for (id, title, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run(&cache);
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {id}: {title} ({secs:.1} s)");
        for l in &outcome.lines {
            println!("    {l}");
        }
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Downgraded => "DOWNGRADED",
        };
        println!("{tag} criterion {id}: {title}\n");
        summary.push((id, tag));
    }
    println!("acceptance summary");
    for (id, tag) in &summary {
        println!("  criterion {id}: {tag}");
    }
    let failed = summary.iter().filter(|(_, t)| *t == "FAIL").count();
    println!(
        "{} passed, {failed} failed, {} downgraded",
        summary.iter().filter(|(_, t)| *t == "PASS").count(),
        summary.iter().filter(|(_, t)| *t == "DOWNGRADED").count()
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
