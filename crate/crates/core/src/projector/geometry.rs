use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D parallel-beam scan of a square image centred at the rotation axis.
///
/// View `a` sits at angle `a * pi / n_angles`. Detector bin `d` is offset
/// `(d - (n_detectors - 1) / 2) * detector_spacing` from the axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGeometry {
    /// Image side length in pixels.
    pub n_pixels: usize,
    /// Pixel side length, mm.
    pub pixel_size: f64,
    pub n_angles: usize,
    pub n_detectors: usize,
    /// Bin spacing, mm.
    pub detector_spacing: f64,
}

impl ScanGeometry {
    /// Detector pitch equal to the pixel size, wide enough to cover the image diagonal.
    pub fn for_image(n_pixels: usize, pixel_size: f64, n_angles: usize) -> Self {
        let mut n_detectors = (n_pixels as f64 * std::f64::consts::SQRT_2).ceil() as usize + 2;
        if n_detectors % 2 != n_pixels % 2 {
            n_detectors += 1;
        }
        Self { n_pixels, pixel_size, n_angles, n_detectors, detector_spacing: pixel_size }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels == 0 || self.n_angles == 0 || self.n_detectors == 0 {
            return Err(Error::invalid("scan geometry counts must be positive"));
        }
        if !(self.pixel_size > 0.0 && self.detector_spacing > 0.0) {
            return Err(Error::invalid("pixel size and detector spacing must be positive"));
        }
        let diag = self.n_pixels as f64 * self.pixel_size * std::f64::consts::SQRT_2;
        if (self.n_detectors as f64) * self.detector_spacing < diag - 1e-9 {
            return Err(Error::invalid(format!(
                "detector array ({} mm) does not span the image diagonal ({diag:.3} mm)",
                self.n_detectors as f64 * self.detector_spacing
            )));
        }
        Ok(())
    }

    /// Number of measurements `M`.
    pub fn n_rays(&self) -> usize {
        self.n_angles * self.n_detectors
    }

    /// Number of unknowns `N`.
    pub fn n_unknowns(&self) -> usize {
        self.n_pixels * self.n_pixels
    }

    pub fn angle(&self, view: usize) -> f64 {
        view as f64 * std::f64::consts::PI / self.n_angles as f64
    }

    pub fn detector_offset(&self, bin: usize) -> f64 {
        (bin as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    /// Half the image side, mm.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.n_pixels as f64 * self.pixel_size
    }

    /// Centre of pixel `(row, col)` in mm; row 0 is the top (largest y).
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let c = (self.n_pixels as f64 - 1.0) / 2.0;
        ((col as f64 - c) * self.pixel_size, (c - row as f64) * self.pixel_size)
    }
}
