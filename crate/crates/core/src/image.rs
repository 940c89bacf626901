//! Row-major 2-D image of Hounsfield values.

use crate::error::{Error, Result};

/// Attenuation value of air on the HU scale.
pub const HU_AIR: f64 = -1000.0;

/// A 2-D image stored row-major, `data[row * width + col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    /// Pixel side length in mm.
    pixel_size: f64,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixel_size: f64, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::dims("image payload", width * height, data.len()));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::invalid(format!("pixel size must be positive, got {pixel_size}")));
        }
        Ok(Self { width, height, pixel_size, data })
    }

    pub fn filled(width: usize, height: usize, pixel_size: f64, value: f64) -> Self {
        Self::new(width, height, pixel_size, vec![value; width * height])
            .expect("filled image with positive dims")
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 1.0, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, pixel_size: f64, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, pixel_size, data).expect("from_fn with positive dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn with_pixel_size(mut self, pixel_size: f64) -> Self {
        assert!(pixel_size > 0.0);
        self.pixel_size = pixel_size;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let w = self.width;
        self.data[row * w + col] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }
}
