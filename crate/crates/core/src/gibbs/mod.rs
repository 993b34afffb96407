//! Conjugate Gibbs sampler: posterior algebra, sweeps and chain management.

mod chains;
mod posterior;
mod sampler;

pub use crate::init::kmeans as kmeans_init;
pub use chains::{run_chains, ChainRun, GibbsConfig, GibbsFit};
pub use posterior::{draw_component_params, update_hypers, ComponentPrior, PosteriorHyper, PriorHyper, PriorSettings};
pub use sampler::{gibbs_sweep, GibbsState, SweepConfig, SweepReport};
