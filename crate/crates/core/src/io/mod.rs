//! Data files, run configuration and results persistence.

mod config;
mod dataset;
mod results;

pub use config::{load_structured, to_toml, RunConfig, StudyConfig};
pub use dataset::{encode_labels, load_csv, load_labels, standardize, CsvOptions, Dataset, StandardizeRecord};
pub use results::{
    density_grid, load_results, save_results, summary_tsv, thin_chain, trim_traces, write_atomic, DensityGrid, Envelope, TraceKeep,
    SCHEMA_VERSION,
};
