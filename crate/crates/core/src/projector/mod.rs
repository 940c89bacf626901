//! Desk-scale 2-D parallel-beam CT: system matrix, projections, noise and FBP.

pub mod fbp;
pub mod geometry;
pub mod sinogram;
pub mod system_matrix;

pub use fbp::fbp;
pub use geometry::ScanGeometry;
pub use sinogram::{
    counts_to_weight, load_sinogram, read_sinogram, save_sinogram, simulate_sinogram, write_sinogram, Dose, Sinogram,
    StatWeights, MU_WATER,
};
pub use system_matrix::{trace_ray, SparseSystemMatrix};
