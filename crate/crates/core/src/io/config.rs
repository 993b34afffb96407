use super::dataset::CsvOptions;
use crate::error::{Error, Result};
use crate::fit::{Engine, FitConfig};
use crate::simulate::ScenarioSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Settings of a `fit` run. Every field has a default, unknown keys are
/// rejected, and the resolved value is written back out as TOML so a run
/// can be repeated from its echo alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input CSV; the command line may give it instead.
    pub data: Option<PathBuf>,
    pub engine: Engine,
    pub g_min: usize,
    pub g_max: usize,
    /// Add components while a criterion selects the largest one fitted.
    pub extend: bool,
    pub max_extra: usize,
    pub seed: u64,
    pub standardize: bool,
    /// Keep every `thin`-th sweep of each chain in the results file.
    pub thin: usize,
    /// Lattice points per axis for two-dimensional density grids.
    pub grid_points: usize,
    pub csv: CsvOptions,
    pub fit: FitConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            engine: Engine::Gibbs,
            g_min: 1,
            g_max: 3,
            extend: true,
            max_extra: 3,
            seed: 1,
            standardize: false,
            thin: 1,
            grid_points: 100,
            csv: CsvOptions::default(),
            fit: FitConfig::default(),
            output: PathBuf::from("salmix-out"),
        }
    }
}

fn check_seed(seed: u64) -> Result<()> {
    // TOML integers are signed 64-bit
    if seed > i64::MAX as u64 {
        return Err(Error::Config(format!("seed must be at most {}, got {seed}", i64::MAX)));
    }
    Ok(())
}

fn check_range(g_min: usize, g_max: usize) -> Result<()> {
    if g_min == 0 || g_min > g_max {
        return Err(Error::Config(format!("g range {g_min}:{g_max} must satisfy 1 <= min <= max")));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check_range(self.g_min, self.g_max)?;
        check_seed(self.seed)?;
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config(format!("grid_points must be at least 2, got {}", self.grid_points)));
        }
        if !self.csv.delimiter.is_ascii() {
            return Err(Error::Config(format!("csv.delimiter must be an ASCII character, got `{}`", self.csv.delimiter)));
        }
        self.fit.validate()
    }
}

/// Settings of a `study` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// `1` to `4` for a built-in scenario, otherwise a scenario file.
    pub scenario: String,
    pub n_datasets: Option<usize>,
    pub n_per_dataset: Option<usize>,
    pub engines: Vec<Engine>,
    /// Defaults to `1..=G+1` for the true `G`.
    pub g_min: Option<usize>,
    pub g_max: Option<usize>,
    pub seed: Option<u64>,
    pub fit: FitConfig,
    pub output: PathBuf,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            scenario: "1".into(),
            n_datasets: None,
            n_per_dataset: None,
            engines: Engine::ALL.to_vec(),
            g_min: None,
            g_max: None,
            seed: None,
            fit: FitConfig::default(),
            output: PathBuf::from("salmix-study"),
        }
    }
}

impl StudyConfig {
    /// The scenario with count, size and seed overrides applied.
    pub fn resolve_scenario(&self) -> Result<ScenarioSpec> {
        let mut spec = match self.scenario.parse::<u32>() {
            Ok(id) => ScenarioSpec::builtin(id)?,
            Err(_) => load_structured::<ScenarioSpec>(Path::new(&self.scenario))?,
        };
        if let Some(n) = self.n_datasets {
            spec.n_datasets = n;
        }
        if let Some(n) = self.n_per_dataset {
            spec.n_per_dataset = n;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn g_range(&self, spec: &ScenarioSpec) -> (usize, usize) {
        (self.g_min.unwrap_or(1), self.g_max.unwrap_or(spec.truth.g() + 1))
    }

    pub fn validate(&self, spec: &ScenarioSpec) -> Result<()> {
        let (lo, hi) = self.g_range(spec);
        check_range(lo, hi)?;
        check_seed(spec.seed)?;
        if self.engines.is_empty() {
            return Err(Error::Config("engines must name at least one engine".into()));
        }
        self.fit.validate()
    }
}

/// Parses a TOML file, or JSON when the extension is `.json`. Errors carry
/// the path and, for TOML, the line and column.
pub fn load_structured<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|e| Error::Config(format!("cannot render configuration: {e}")))
}
