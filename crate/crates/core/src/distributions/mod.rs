//! Densities, moments and samplers: GIG, SAL, and the conjugate families
//! used by the Gibbs sampler.

mod gig;
mod multivariate;
mod sal;

pub use gig::{gig_log_density, gig_mean, gig_mean_inverse, gig_sample, GigParams};
pub use multivariate::{
    correlated_normal, dirichlet_sample, exp1_sample, mvn_sample, standard_normal, wishart_sample,
    wishart_sample_inv_scale,
};
pub use sal::{sal_log_density, sal_sample, SalKernel, SalParams};

pub(crate) use multivariate::lower_times;
