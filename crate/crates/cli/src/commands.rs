use crate::args::{CompareArgs, CriterionArg, EngineArg, EngineFlags, EvaluateArgs, FitArgs, RelabelArg, RhoArg, SimulateArgs, StudyArgs};
use crate::exit;
use crate::report;
use salmix::diagnostics::{best_permutation, flatten_params, RelabelMethod};
use salmix::fit::{fit_range, Engine, FitConfig, FitDetail, ModelFit, RangeFit, RangeOptions};
use salmix::io::{
    density_grid, encode_labels, load_csv, load_labels, load_results, load_structured, save_results, standardize, summary_tsv, to_toml,
    trim_traces, write_atomic, RunConfig, StandardizeRecord, StudyConfig, TraceKeep,
};
use salmix::mixture::MixtureParams;
use salmix::selection::{ari, classification_report, ClassificationReport, Criterion, RhoConvention};
use salmix::simulate::run_study;
use salmix::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Body of a `fit` results file.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitResults {
    pub config: RunConfig,
    pub dataset: DatasetInfo,
    pub standardization: Option<StandardizeRecord>,
    /// Estimates mapped back to the original units when the data were
    /// standardized.
    pub original_scale: Vec<(usize, MixtureParams)>,
    pub range: RangeFit,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub columns: Vec<String>,
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub results: PathBuf,
    pub g: usize,
    pub classes: Vec<String>,
    pub report: ClassificationReport,
}

fn engine(e: EngineArg) -> Engine {
    match e {
        EngineArg::Gibbs => Engine::Gibbs,
        EngineArg::Em => Engine::Em,
    }
}

fn criterion(c: CriterionArg) -> Criterion {
    match c {
        CriterionArg::Bic => Criterion::Bic,
        CriterionArg::Icl => Criterion::Icl,
    }
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("g range `{s}` is not MIN:MAX or a single count"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let g = num(s)?;
            (g, g)
        }
    };
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("g range {lo}:{hi} must satisfy 1 <= min <= max")));
    }
    Ok((lo, hi))
}

fn apply_engine_flags(fit: &mut FitConfig, f: &EngineFlags) {
    if let Some(x) = f.block_weight {
        fit.prior.block_weight = x;
    }
    if let Some(x) = f.df_offset {
        fit.prior.df_offset = x;
    }
    if let Some(x) = f.dirichlet {
        fit.prior.dirichlet = x;
    }
    if let Some(x) = f.setback_threshold {
        fit.em.setback_threshold = x;
    }
    if let Some(x) = f.aitken_eps {
        fit.em.aitken_eps = x;
    }
    if let Some(x) = f.max_iters {
        fit.em.max_iters = x;
    }
    if let Some(x) = f.chains {
        fit.gibbs.n_chains = x;
    }
    if let Some(x) = f.max_sweeps {
        fit.gibbs.max_sweeps = x;
    }
    if let Some(x) = f.min_sweeps {
        fit.gibbs.min_sweeps = x;
    }
    if let Some(x) = f.retained {
        fit.gibbs.n_retained = x;
    }
    if let Some(r) = f.relabel {
        fit.gibbs.relabel = match r {
            RelabelArg::Reference => RelabelMethod::Reference,
            RelabelArg::WeightOrder => RelabelMethod::WeightOrder,
        };
    }
    if let Some(r) = f.rho {
        fit.rho = match r {
            RhoArg::Full => RhoConvention::Full,
            RhoArg::OffDiagonal => RhoConvention::OffDiagonal,
        };
    }
}

fn resolve_run_config(a: &FitArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &a.config {
        Some(p) => load_structured(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &a.data {
        cfg.data = Some(d.clone());
    }
    if let Some(e) = a.engine {
        cfg.engine = engine(e);
    }
    if let Some(r) = &a.g_range {
        (cfg.g_min, cfg.g_max) = parse_range(r)?;
    }
    if a.no_extend {
        cfg.extend = false;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.standardize {
        cfg.standardize = true;
    }
    if a.no_header {
        cfg.csv.has_header = false;
    }
    if let Some(d) = a.delimiter {
        cfg.csv.delimiter = d;
    }
    if let Some(c) = &a.label_column {
        cfg.csv.label_column = Some(c.clone());
    }
    if let Some(c) = &a.columns {
        cfg.csv.columns = Some(c.clone());
    }
    if let Some(t) = a.thin {
        cfg.thin = t;
    }
    if let Some(g) = a.grid_points {
        cfg.grid_points = g;
    }
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    apply_engine_flags(&mut cfg.fit, &a.engine_flags);
    cfg.validate()?;
    if cfg.data.is_none() {
        return Err(Error::Config("no input file: pass DATA or set `data` in the configuration".into()));
    }
    Ok(cfg)
}

fn echo_config<T: Serialize>(cfg: &T, seed: u64) -> Result<String> {
    let text = to_toml(cfg)?;
    println!("# resolved configuration (master seed {seed})");
    print!("{text}");
    println!("# end of configuration\n");
    Ok(text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Bounds of column `j` widened by a tenth of its span on each side.
fn padded_bounds(values: &salmix::numerics::DataMatrix, j: usize) -> (f64, f64) {
    let (lo, hi) = values
        .rows()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
    let pad = 0.1 * (hi - lo).max(f64::EPSILON);
    (lo - pad, hi + pad)
}

fn selected_gs(range: &RangeFit) -> Vec<usize> {
    let mut gs: Vec<usize> = range.best_bic.into_iter().chain(range.best_icl).collect();
    gs.sort_unstable();
    gs.dedup();
    gs
}

pub fn fit(a: FitArgs) -> Result<u8> {
    let cfg = resolve_run_config(&a)?;
    let config_text = echo_config(&cfg, cfg.seed)?;
    let data_path = cfg.data.clone().expect("checked by resolve_run_config");
    let raw = load_csv(&data_path, &cfg.csv)?;
    let (dataset, record) = if cfg.standardize {
        let (d, r) = standardize(&raw)?;
        (d, Some(r))
    } else {
        (raw, None)
    };
    println!("{}: {} observations, {} variables ({})", data_path.display(), dataset.n(), dataset.p(), dataset.columns.join(", "));

    let options = RangeOptions {
        extend: cfg.extend,
        max_extra: cfg.max_extra,
    };
    let mut range = fit_range(&dataset.values, cfg.g_min..=cfg.g_max, cfg.engine, &cfg.fit, cfg.seed, &options)?;
    print!("\n{}", report::scores_table(&range));
    if range.extended_by > 0 {
        println!("range extended by {} beyond G = {}", range.extended_by, cfg.g_max);
    }

    let out = &cfg.output;
    std::fs::create_dir_all(out)?;
    write_text(&out.join("config.toml"), &config_text)?;
    write_text(&out.join("scores.tsv"), &report::scores_tsv(&range))?;

    let Some(best_bic) = range.best_bic else {
        eprintln!("error: no component count could be fitted");
        trim_traces(&mut range, TraceKeep::Thin(cfg.thin));
        save_fit(&cfg, &dataset, record, range)?;
        return Ok(exit::FIT_FAILED);
    };
    let best_icl = range.best_icl.unwrap_or(best_bic);
    println!("\nselected by BIC: G = {best_bic}");
    println!("selected by ICL: G = {best_icl}");

    for g in selected_gs(&range) {
        let f = range.fit_for(g).expect("selected fits exist");
        print!("\nestimates for G = {g}{}\n{}", if cfg.standardize { " (standardized scale)" } else { "" }, report::params(&f.params));
        if let Some(r) = &record {
            print!("estimates for G = {g} (original scale)\n{}", report::params(&r.restore_params(&f.params)?));
        }
        if dataset.p() == 2 {
            let grid = density_grid(
                &f.params,
                padded_bounds(&dataset.values, 0),
                padded_bounds(&dataset.values, 1),
                cfg.grid_points,
                cfg.grid_points,
            )?;
            write_text(&out.join(format!("grid_g{g}.tsv")), &grid.to_tsv())?;
        }
    }
    for e in &range.entries {
        if let Some(ModelFit {
            detail: FitDetail::Gibbs(gf),
            g,
            ..
        }) = &e.fit
        {
            write_text(&out.join(format!("summary_g{g}.tsv")), &summary_tsv(&gf.summary))?;
        }
    }

    let bic_fit = range.fit_for(best_bic).expect("selected");
    let icl_fit = range.fit_for(best_icl).expect("selected");
    let mut labels = String::from("row\tlabel_bic\tlabel_icl");
    let truth = dataset.label_indices();
    if truth.is_some() {
        labels.push_str("\ttruth");
    }
    labels.push('\n');
    for i in 0..dataset.n() {
        labels.push_str(&format!("{}\t{}\t{}", i + 1, bic_fit.labels[i] + 1, icl_fit.labels[i] + 1));
        if let Some(t) = &dataset.labels {
            labels.push('\t');
            labels.push_str(&t[i]);
        }
        labels.push('\n');
    }
    write_text(&out.join("labels.tsv"), &labels)?;
    if let Some((t, classes)) = &truth {
        let r = classification_report(t, &bic_fit.labels)?;
        println!("\nagreement with `{}` (BIC model): ARI {:.4}, hit rate {:.4}", cfg.csv.label_column.as_deref().unwrap_or("labels"), r.ari, r.hit_rate);
        print!("{}", report::crosstab(&r.table, classes));
    }

    let unconverged: Vec<usize> = selected_gs(&range)
        .into_iter()
        .filter(|&g| range.fit_for(g).is_some_and(|f| !f.converged))
        .collect();
    trim_traces(&mut range, TraceKeep::Thin(cfg.thin));
    save_fit(&cfg, &dataset, record, range)?;
    if !unconverged.is_empty() {
        eprintln!("warning: the selected fit for G = {unconverged:?} did not converge; results were written");
        return Ok(exit::NOT_CONVERGED);
    }
    Ok(0)
}

fn save_fit(cfg: &RunConfig, dataset: &salmix::io::Dataset, record: Option<StandardizeRecord>, range: RangeFit) -> Result<()> {
    let original_scale = match &record {
        Some(r) => range
            .entries
            .iter()
            .filter_map(|e| e.fit.as_ref())
            .map(|f| Ok((f.g, r.restore_params(&f.params)?)))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let body = FitResults {
        config: cfg.clone(),
        dataset: DatasetInfo {
            name: dataset.name.clone(),
            columns: dataset.columns.clone(),
            n: dataset.n(),
            p: dataset.p(),
        },
        standardization: record,
        original_scale,
        range,
    };
    let path = cfg.output.join("results.json");
    save_results(&path, "fit", &body)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<u8> {
    let cfg = StudyConfig {
        scenario: a.scenario.clone(),
        n_per_dataset: a.n,
        seed: a.seed,
        ..StudyConfig::default()
    };
    let spec = cfg.resolve_scenario()?;
    let (data, labels) = spec.dataset(a.dataset);
    let p = data.ncols();
    let mut text: String = (1..=p).map(|j| format!("x{j},")).collect();
    text.push_str("label\n");
    for (row, l) in data.rows().zip(&labels) {
        for v in row {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{}\n", l + 1));
    }
    write_atomic(&a.out, text.as_bytes())?;
    println!(
        "wrote {} rows of scenario `{}` (dataset {}, seed {}) to {}",
        data.nrows(),
        spec.name,
        a.dataset,
        spec.seed,
        a.out.display()
    );
    Ok(0)
}

pub fn study(a: StudyArgs) -> Result<u8> {
    let mut cfg: StudyConfig = match &a.config {
        Some(p) => load_structured(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = &a.scenario {
        cfg.scenario = s.clone();
    }
    if let Some(n) = a.n_datasets {
        cfg.n_datasets = Some(n);
    }
    if let Some(n) = a.n_per_dataset {
        cfg.n_per_dataset = Some(n);
    }
    if let Some(e) = &a.engines {
        cfg.engines = e.iter().map(|&e| engine(e)).collect();
    }
    if let Some(r) = &a.g_range {
        let (lo, hi) = parse_range(r)?;
        cfg.g_min = Some(lo);
        cfg.g_max = Some(hi);
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    apply_engine_flags(&mut cfg.fit, &a.engine_flags);
    let spec = cfg.resolve_scenario()?;
    cfg.validate(&spec)?;
    let (lo, hi) = cfg.g_range(&spec);
    cfg.n_datasets = Some(spec.n_datasets);
    cfg.n_per_dataset = Some(spec.n_per_dataset);
    cfg.seed = Some(spec.seed);
    cfg.g_min = Some(lo);
    cfg.g_max = Some(hi);
    let config_text = echo_config(&cfg, spec.seed)?;
    println!(
        "scenario `{}`: {} datasets of {} observations, G = {lo}..={hi}",
        spec.name, spec.n_datasets, spec.n_per_dataset
    );

    let report = run_study(&spec, &cfg.engines, lo..=hi, &cfg.fit)?;
    println!("\nparameter recovery at the true G = {} (datasets aligned to the truth)", spec.truth.g());
    print!("{}", report::recovery_table(&report));
    println!("\nselection and classification");
    print!("{}", report::selection_table(&report));
    for e in &report.engines {
        for d in &e.datasets {
            for (g, msg) in &d.errors {
                eprintln!("warning: {} dataset {} G = {g}: {msg}", e.engine, d.index);
            }
        }
    }

    let out = &cfg.output;
    std::fs::create_dir_all(out)?;
    write_text(&out.join("config.toml"), &config_text)?;
    write_text(&out.join("recovery.tsv"), &report::recovery_tsv(&report))?;
    write_text(&out.join("selection.tsv"), &report::selection_tsv(&report))?;
    let path = out.join("study.json");
    save_results(&path, "study", &report)?;
    println!("wrote {}", path.display());
    Ok(0)
}

pub fn evaluate(a: EvaluateArgs) -> Result<u8> {
    let results: FitResults = load_results(&a.results, "fit")?;
    let fit = match a.g {
        Some(g) => results
            .range
            .fit_for(g)
            .ok_or_else(|| Error::Data(format!("{}: no successful fit with G = {g}", a.results.display())))?,
        None => results
            .range
            .selected(criterion(a.criterion))
            .ok_or_else(|| Error::Data(format!("{}: no selected model", a.results.display())))?,
    };
    let header = results.config.csv.has_header;
    let delimiter = results.config.csv.delimiter;
    let raw = load_labels(&a.labels, a.label_column.as_deref(), header, delimiter)?;
    if raw.len() != fit.labels.len() {
        return Err(Error::Data(format!(
            "{} holds {} labels but the fit has {} observations",
            a.labels.display(),
            raw.len(),
            fit.labels.len()
        )));
    }
    let (truth, classes) = encode_labels(&raw);
    let r = classification_report(&truth, &fit.labels)?;
    println!("G = {} ({} engine)", fit.g, fit.engine);
    println!("ARI       {:.4}", r.ari);
    println!("hit rate  {:.4}", r.hit_rate);
    print!("{}", report::crosstab(&r.table, &classes));
    let out = a
        .out
        .unwrap_or_else(|| a.results.parent().unwrap_or(Path::new(".")).join("evaluation.json"));
    save_results(
        &out,
        "evaluation",
        &Evaluation {
            results: a.results.clone(),
            g: fit.g,
            classes,
            report: r,
        },
    )?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn max_abs_diff(a: &MixtureParams, b: &MixtureParams) -> f64 {
    let aligned = b.permuted(&best_permutation(b, a));
    flatten_params(a)
        .iter()
        .zip(flatten_params(&aligned))
        .map(|((_, x), (_, y))| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn compare(a: CompareArgs) -> Result<u8> {
    let ra: FitResults = load_results(&a.a, "fit")?;
    let rb: FitResults = load_results(&a.b, "fit")?;
    let mut differ = false;
    println!("{:>3}  {:>12}  {:>12}  {:>9}", "G", "max |param|", "max |score|", "label ARI");
    let mut gs: Vec<usize> = ra.range.entries.iter().chain(&rb.range.entries).map(|e| e.g).collect();
    gs.sort_unstable();
    gs.dedup();
    for g in gs {
        let (fa, fb) = match (ra.range.fit_for(g), rb.range.fit_for(g)) {
            (Some(fa), Some(fb)) => (fa, fb),
            (fa, fb) => {
                if fa.is_some() || fb.is_some() {
                    differ = true;
                    println!("{g:>3}  fitted only in {}", if fa.is_some() { "A" } else { "B" });
                }
                continue;
            }
        };
        if fa.params.p() != fb.params.p() || fa.labels.len() != fb.labels.len() {
            differ = true;
            println!("{g:>3}  different data shapes");
            continue;
        }
        let dp = max_abs_diff(&fa.params, &fb.params);
        let (sa, sb) = (&fa.score, &fb.score);
        let ds = [sa.loglik - sb.loglik, sa.bic - sb.bic, sa.icl - sb.icl]
            .iter()
            .fold(0.0_f64, |m, d| m.max(d.abs()));
        let agreement = if fa.labels.len() >= 2 { ari(&fa.labels, &fb.labels)? } else { 1.0 };
        let bad = !(dp <= a.tol && ds <= a.tol && agreement >= 1.0 - 1e-12);
        differ |= bad;
        println!("{g:>3}  {dp:>12.3e}  {ds:>12.3e}  {agreement:>9.4}{}", if bad { "  differs" } else { "" });
    }
    for (name, x, y) in [("BIC", ra.range.best_bic, rb.range.best_bic), ("ICL", ra.range.best_icl, rb.range.best_icl)] {
        let show = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |g| g.to_string());
        println!("selected by {name}: {} vs {}", show(x), show(y));
        differ |= x != y;
    }
    if differ {
        println!("results differ beyond tolerance {}", a.tol);
        Ok(exit::DIFFERENT)
    } else {
        println!("results agree within tolerance {}", a.tol);
        Ok(0)
    }
}
