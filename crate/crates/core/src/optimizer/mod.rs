//! MAP estimation under the GM-MRF prior.

pub mod icd;
pub mod map;
pub mod problem;

pub use icd::{icd_pixel_update, icd_sweep, icd_sweep_colored, IcdState, PixelUpdate};
pub use map::{denoise, map_reconstruct, MapResult, SolverOptions, StopCriteria, UpdateOrder};
pub use problem::{Forward, MapProblem};

use crate::error::Result;
use crate::image::Image;
use crate::model::{GmMrfModel, PatchWeights};

/// Responsibilities of every interior patch of `x_anchor`.
pub fn anchor_surrogate(model: &GmMrfModel, x_anchor: &Image) -> Result<PatchWeights> {
    model.anchor(x_anchor)
}
