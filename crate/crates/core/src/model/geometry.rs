use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Shape of a rectangular 2-D patch with odd side lengths, centred on a pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct PatchGeometry {
    rows: usize,
    cols: usize,
}

impl PatchGeometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        for d in [rows, cols] {
            if d == 0 || d % 2 == 0 {
                return Err(Error::invalid(format!("patch side lengths must be odd and positive, got {rows}x{cols}")));
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    /// Number of pixels in a patch.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_rows(&self) -> usize {
        self.rows / 2
    }

    pub fn half_cols(&self) -> usize {
        self.cols / 2
    }

    /// Flattened index of the centre pixel.
    pub fn center_offset(&self) -> usize {
        self.half_rows() * self.cols + self.half_cols()
    }

    /// Whether an image of the given size holds at least one full patch.
    pub fn fits(&self, height: usize, width: usize) -> bool {
        height >= self.rows && width >= self.cols
    }

    pub fn check_fits(&self, image: &Image) -> Result<()> {
        if self.fits(image.height(), image.width()) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "image {}x{} is smaller than the {}x{} patch",
                image.height(),
                image.width(),
                self.rows,
                self.cols
            )))
        }
    }

    /// Interior patch centres: rows and columns whose full patch lies inside the image.
    pub fn interior(&self, height: usize, width: usize) -> InteriorCenters {
        let (hr, hc) = (self.half_rows(), self.half_cols());
        InteriorCenters {
            row_lo: hr,
            row_hi: height.saturating_sub(hr).max(hr),
            col_lo: hc,
            col_hi: width.saturating_sub(hc).max(hc),
        }
    }

    /// Copy the patch centred at `(row, col)` into `out`, row-major.
    #[inline]
    pub fn extract(&self, image: &Image, row: usize, col: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let w = image.width();
        let data = image.data();
        let r0 = row - self.half_rows();
        let c0 = col - self.half_cols();
        for pr in 0..self.rows {
            let start = (r0 + pr) * w + c0;
            out[pr * self.cols..(pr + 1) * self.cols].copy_from_slice(&data[start..start + self.cols]);
        }
    }
}

impl TryFrom<[usize; 2]> for PatchGeometry {
    type Error = Error;

    fn try_from(d: [usize; 2]) -> Result<Self> {
        Self::new(d[0], d[1])
    }
}

impl From<PatchGeometry> for [usize; 2] {
    fn from(g: PatchGeometry) -> Self {
        g.dims()
    }
}

/// Half-open ranges of interior patch centres.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorCenters {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
}

impl InteriorCenters {
    pub fn count(&self) -> usize {
        (self.row_hi - self.row_lo) * (self.col_hi - self.col_lo)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row_lo..self.row_hi).contains(&row) && (self.col_lo..self.col_hi).contains(&col)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row_lo..self.row_hi).flat_map(move |r| (self.col_lo..self.col_hi).map(move |c| (r, c)))
    }
}
