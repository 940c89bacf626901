//! Patch mixture, GM-MRF energy, majorizer and covariance control.

pub mod geometry;
pub mod gmmrf;
pub mod io;
pub mod mixture;
pub mod scaling;
pub mod surrogate;

pub use geometry::{InteriorCenters, PatchGeometry};
pub use gmmrf::{GmMrfModel, PatchWeights, RegParams, DEFAULT_ALPHA};
pub use io::{load_model, read_model, save_model, write_model};
pub use mixture::{merge_mixtures, GaussianComponent, GaussianMixture, Responsibilities, Workspace};
pub use scaling::{apply_covariance_scaling, average_eigenvalue, component_average_eigenvalue, component_scales};
pub use surrogate::{exp_mixture_posteriors, exp_mixture_surrogate, neg_log_exp_mixture};
