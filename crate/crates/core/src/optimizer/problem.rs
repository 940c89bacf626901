use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::GmMrfModel;
use crate::numeric::pairwise_sum;
use crate::projector::{fbp, Sinogram, SparseSystemMatrix, StatWeights};

/// Forward operator of the data term.
#[derive(Clone, Copy, Debug)]
pub enum Forward<'a> {
    /// `A = I`: the measurements are a noisy image.
    Identity,
    Projector(&'a SparseSystemMatrix),
}

/// `argmin_x 1/2 ||y - A x||_D^2 + u(x)` with a GM-MRF prior `u`.
#[derive(Clone, Debug)]
pub struct MapProblem<'a> {
    forward: Forward<'a>,
    y: Vec<f64>,
    weights: Vec<f64>,
    model: &'a GmMrfModel,
    width: usize,
    height: usize,
    pixel_size: f64,
}

impl<'a> MapProblem<'a> {
    /// Denoising problem: `A = I`, `D = I / noise_sigma^2`.
    pub fn denoising(noisy: &Image, noise_sigma: f64, model: &'a GmMrfModel) -> Result<Self> {
        if !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
            return Err(Error::invalid(format!("noise sigma must be positive, got {noise_sigma}")));
        }
        let w = 1.0 / (noise_sigma * noise_sigma);
        Self::with_identity(noisy, StatWeights::uniform(noisy.len(), w)?, model)
    }

    /// Identity forward model with arbitrary per-pixel weights.
    pub fn with_identity(y: &Image, weights: StatWeights, model: &'a GmMrfModel) -> Result<Self> {
        if weights.len() != y.len() {
            return Err(Error::dims("weight count", y.len(), weights.len()));
        }
        model.geometry().check_fits(y)?;
        Ok(Self {
            forward: Forward::Identity,
            y: y.data().to_vec(),
            weights: weights.as_slice().to_vec(),
            model,
            width: y.width(),
            height: y.height(),
            pixel_size: y.pixel_size(),
        })
    }

    /// Tomographic problem with system matrix `a`.
    pub fn tomography(a: &'a SparseSystemMatrix, y: &Sinogram, weights: &StatWeights, model: &'a GmMrfModel) -> Result<Self> {
        if y.geometry() != a.geometry() {
            return Err(Error::invalid("sinogram geometry differs from the system matrix geometry"));
        }
        if weights.len() != y.len() {
            return Err(Error::dims("weight count", y.len(), weights.len()));
        }
        let n = a.geometry().n_pixels;
        if !model.geometry().fits(n, n) {
            return Err(Error::invalid("image is smaller than the model patch"));
        }
        Ok(Self {
            forward: Forward::Projector(a),
            y: y.values().to_vec(),
            weights: weights.as_slice().to_vec(),
            model,
            width: n,
            height: n,
            pixel_size: a.geometry().pixel_size,
        })
    }

    pub fn forward(&self) -> Forward<'a> {
        self.forward
    }

    pub fn model(&self) -> &'a GmMrfModel {
        self.model
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn check_image(&self, x: &Image) -> Result<()> {
        if x.width() != self.width || x.height() != self.height {
            return Err(Error::invalid(format!(
                "image is {}x{}, problem expects {}x{}",
                x.height(),
                x.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.forward {
            Forward::Identity => Ok(x.to_vec()),
            Forward::Projector(a) => a.apply(x),
        }
    }

    /// `y - A x`.
    pub fn residual(&self, x: &Image) -> Result<Vec<f64>> {
        self.check_image(x)?;
        let ax = self.apply(x.data())?;
        Ok(self.y.iter().zip(ax).map(|(y, a)| y - a).collect())
    }

    /// `1/2 ||y - A x||_D^2`.
    pub fn data_term(&self, x: &Image) -> Result<f64> {
        let e = self.residual(x)?;
        Ok(0.5 * weighted_sq_norm(&e, &self.weights))
    }

    /// Exact MAP cost `1/2 ||y - A x||_D^2 + u(x)`.
    pub fn objective(&self, x: &Image) -> Result<f64> {
        Ok(self.data_term(x)? + self.model.energy(x)?)
    }

    /// Default start: `y` for denoising; for tomography the back-projection
    /// scaled so its re-projection best fits `y` in least squares.
    pub fn default_init(&self) -> Result<Image> {
        match self.forward {
            Forward::Identity => Image::new(self.width, self.height, self.pixel_size, self.y.clone()),
            Forward::Projector(a) => {
                let b = a.apply_transpose(&self.y)?;
                let ab = a.apply(&b)?;
                let num: f64 = ab.iter().zip(&self.y).map(|(p, q)| p * q).sum();
                let den: f64 = ab.iter().map(|p| p * p).sum();
                let c = if den > 0.0 { num / den } else { 0.0 };
                Image::new(self.width, self.height, self.pixel_size, b.into_iter().map(|v| c * v).collect())
            }
        }
    }

    /// FBP start for tomography; `y` for denoising.
    pub fn fbp_init(&self) -> Result<Image> {
        match self.forward {
            Forward::Identity => self.default_init(),
            Forward::Projector(a) => fbp(&Sinogram::new(*a.geometry(), self.y.clone())?),
        }
    }
}

pub(crate) fn weighted_sq_norm(e: &[f64], d: &[f64]) -> f64 {
    let terms: Vec<f64> = e.iter().zip(d).map(|(v, w)| w * v * v).collect();
    pairwise_sum(&terms)
}
