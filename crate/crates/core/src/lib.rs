//! Gaussian-mixture Markov random field image prior with an exact quadratic
//! majorizer, coordinate-descent MAP solver, patch-model training, and a
//! desk-scale 2-D parallel-beam CT toolkit for exercising it.

mod binio;
pub mod error;
pub mod image;
pub mod imageio;
pub mod metrics;
pub mod model;
mod numeric;
pub mod optimizer;
pub mod phantom;
pub mod projector;
pub mod train;

pub use error::{Error, Result};
pub use image::{Image, HU_AIR};
pub use numeric::{log_sum_exp, pairwise_sum};
