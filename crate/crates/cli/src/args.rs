use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "salmix", version, about = "Fit, simulate and evaluate mixtures of shifted asymmetric Laplace distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a range of component counts to a CSV file and select by BIC and ICL
    Fit(FitArgs),
    /// Write one simulated dataset, with its generating labels, as CSV
    Simulate(SimulateArgs),
    /// Run a replicated simulation study and report recovery, ARI and selection counts
    Study(StudyArgs),
    /// Score the labels of a fit against reference labels
    Evaluate(EvaluateArgs),
    /// Compare two fit results files (exit 1 when they differ beyond the tolerance)
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    Gibbs,
    Em,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RhoArg {
    /// p(p+1)/2 free parameters per scale matrix
    Full,
    /// p(p-1)/2 free parameters per scale matrix
    OffDiagonal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RelabelArg {
    Reference,
    WeightOrder,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum CriterionArg {
    #[default]
    Bic,
    Icl,
}

/// Engine settings shared by `fit` and `study`. Unset flags keep the value
/// from `--config`, or the built-in default shown.
#[derive(Debug, Args)]
pub struct EngineFlags {
    /// Prior weight on the location and skewness block [default: 0.01]
    #[arg(long, value_name = "X")]
    pub block_weight: Option<f64>,
    /// Wishart degrees of freedom minus the dimension [default: 2]
    #[arg(long, value_name = "X")]
    pub df_offset: Option<f64>,
    /// Dirichlet concentration of the mixing weights [default: 1]
    #[arg(long, value_name = "X")]
    pub dirichlet: Option<f64>,
    /// EM: freeze a location once it comes this close to an observation [default: 1e-6]
    #[arg(long, value_name = "X")]
    pub setback_threshold: Option<f64>,
    /// EM: Aitken stopping tolerance [default: 0.01]
    #[arg(long, value_name = "X")]
    pub aitken_eps: Option<f64>,
    /// EM: iteration cap per start [default: 1000]
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,
    /// Gibbs: number of chains [default: 3]
    #[arg(long, value_name = "N")]
    pub chains: Option<usize>,
    /// Gibbs: sweep cap per chain [default: 10000]
    #[arg(long, value_name = "N")]
    pub max_sweeps: Option<usize>,
    /// Gibbs: sweeps before the first convergence check [default: 1000]
    #[arg(long, value_name = "N")]
    pub min_sweeps: Option<usize>,
    /// Gibbs: draws pooled across chains for the estimates [default: 500]
    #[arg(long, value_name = "N")]
    pub retained: Option<usize>,
    /// Gibbs: how pooled draws are put on a common labelling [default: reference]
    #[arg(long, value_enum)]
    pub relabel: Option<RelabelArg>,
    /// Free-parameter count used by BIC and ICL [default: full]
    #[arg(long, value_enum)]
    pub rho: Option<RhoArg>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV file (or `data` in the configuration)
    pub data: Option<PathBuf>,
    /// TOML (or .json) run configuration; flags override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Estimation engine [default: gibbs]
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Component counts to fit, as MIN:MAX or a single number [default: 1:3]
    #[arg(long, value_name = "MIN:MAX")]
    pub g_range: Option<String>,
    /// Do not add components when a criterion selects the largest one
    #[arg(long)]
    pub no_extend: bool,
    /// Master seed [default: 1]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Z-score every column before fitting
    #[arg(long)]
    pub standardize: bool,
    /// The file has no header row
    #[arg(long)]
    pub no_header: bool,
    /// Field delimiter [default: ,]
    #[arg(long, value_name = "CHAR")]
    pub delimiter: Option<char>,
    /// Column holding class labels, excluded from the fit
    #[arg(long, value_name = "NAME")]
    pub label_column: Option<String>,
    /// Comma-separated value columns to keep [default: all]
    #[arg(long, value_name = "A,B,..", value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Keep every N-th sweep of each chain in the results file [default: 1]
    #[arg(long, value_name = "N")]
    pub thin: Option<usize>,
    /// Lattice points per axis of the density grids [default: 100]
    #[arg(long, value_name = "N")]
    pub grid_points: Option<usize>,
    #[command(flatten)]
    pub engine_flags: EngineFlags,
    /// Output directory [default: salmix-out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario 1-4 or a scenario file
    #[arg(long, default_value = "1")]
    pub scenario: String,
    /// Rows to draw [default: the scenario's dataset size, 500 for built-ins]
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,
    /// Master seed [default: the scenario's]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Which dataset of the study to reproduce
    #[arg(long, value_name = "K", default_value_t = 0)]
    pub dataset: usize,
    /// Output CSV
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// TOML (or .json) study configuration; flags override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in scenario 1-4 or a scenario file [default: 1]
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of simulated datasets [default: 10]
    #[arg(long, value_name = "N")]
    pub n_datasets: Option<usize>,
    /// Rows per dataset [default: 500]
    #[arg(long, value_name = "N")]
    pub n_per_dataset: Option<usize>,
    /// Comma-separated engines [default: gibbs,em]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub engines: Option<Vec<EngineArg>>,
    /// Component counts to fit [default: 1 to one more than the true count]
    #[arg(long, value_name = "MIN:MAX")]
    pub g_range: Option<String>,
    /// Master seed [default: the scenario's]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub engine_flags: EngineFlags,
    /// Output directory [default: salmix-study]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// results.json written by `fit`
    pub results: PathBuf,
    /// CSV holding the reference labels
    pub labels: PathBuf,
    /// Label column in the labels file [default: the only or last column]
    #[arg(long, value_name = "NAME")]
    pub label_column: Option<String>,
    /// Model whose labels are scored
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    pub criterion: CriterionArg,
    /// Score this component count instead of the selected one
    #[arg(long, value_name = "G")]
    pub g: Option<usize>,
    /// Report file [default: evaluation.json beside the results]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// First results.json
    pub a: PathBuf,
    /// Second results.json
    pub b: PathBuf,
    /// Largest tolerated absolute difference in estimates and scores
    #[arg(long, value_name = "X", default_value_t = 1e-6)]
    pub tol: f64,
}
