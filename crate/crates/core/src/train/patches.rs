use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::PatchGeometry;

/// `N x L` matrix of flattened patches with per-patch provenance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PatchDataset {
    dim: usize,
    patches: Vec<f64>,
    source_ids: Vec<u32>,
}

impl PatchDataset {
    pub fn new(dim: usize) -> Self {
        Self { dim, patches: Vec::new(), source_ids: Vec::new() }
    }

    /// Builds from a flat row-major buffer; all rows share `source_id`.
    pub fn from_rows(dim: usize, patches: Vec<f64>, source_id: u32) -> Result<Self> {
        if dim == 0 || patches.len() % dim != 0 {
            return Err(Error::invalid(format!("buffer of {} values is not a whole number of {dim}-vectors", patches.len())));
        }
        if patches.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("patch data must be finite"));
        }
        let n = patches.len() / dim;
        Ok(Self { dim, patches, source_ids: vec![source_id; n] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.source_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.patches[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.patches.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.patches
    }

    pub fn source_ids(&self) -> &[u32] {
        &self.source_ids
    }

    pub fn push(&mut self, patch: &[f64], source_id: u32) {
        debug_assert_eq!(patch.len(), self.dim);
        self.patches.extend_from_slice(patch);
        self.source_ids.push(source_id);
    }

    pub fn append(&mut self, other: &PatchDataset) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::dims("patch dimension", self.dim, other.dim));
        }
        self.patches.extend_from_slice(&other.patches);
        self.source_ids.extend_from_slice(&other.source_ids);
        Ok(())
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> PatchDataset {
        let mut out = PatchDataset::new(self.dim);
        for &i in indices {
            out.push(self.row(i), self.source_ids[i]);
        }
        out
    }
}

/// All interior patches on a `stride` grid, each flattened row-major.
pub fn extract_patches(image: &Image, geometry: PatchGeometry, stride: usize, source_id: u32) -> Result<PatchDataset> {
    if stride == 0 {
        return Err(Error::invalid("patch stride must be positive"));
    }
    geometry.check_fits(image)?;
    if image.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training image contains non-finite values"));
    }
    let centers = geometry.interior(image.height(), image.width());
    let mut out = PatchDataset::new(geometry.len());
    let mut buf = vec![0.0; geometry.len()];
    for r in (centers.row_lo..centers.row_hi).step_by(stride) {
        for c in (centers.col_lo..centers.col_hi).step_by(stride) {
            geometry.extract(image, r, c, &mut buf);
            out.push(&buf, source_id);
        }
    }
    Ok(out)
}
