//! The GM-MRF prior: a patch mixture tiled over the image with covariance control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{InteriorCenters, PatchGeometry};
use super::mixture::{GaussianMixture, Workspace};
use super::scaling::{apply_covariance_scaling, check_scaling_params, component_scales};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::numeric::pairwise_sum;

/// Default stationary scale `alpha` in HU.
pub const DEFAULT_ALPHA: f64 = 33.0;

/// Regularization parameters layered on a trained mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    /// Overall regularization; larger is weaker.
    pub sigma_x: f64,
    /// Compression rate of the component average eigenvalues.
    pub p: f64,
    /// Stationary scale of the compression, HU.
    pub alpha: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        Self { sigma_x: 1.0, p: 0.0, alpha: DEFAULT_ALPHA }
    }
}

impl RegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite()) {
            return Err(Error::invalid(format!("sigma_x must be positive, got {}", self.sigma_x)));
        }
        check_scaling_params(self.p, self.alpha)
    }
}

/// GM-MRF image prior.
///
/// `mixture` holds the trained parameters; `scaled` is derived from them with
/// covariances `R_k / sigma_k^2` and is the one used for every evaluation.
#[derive(Clone, Debug)]
pub struct GmMrfModel {
    geometry: PatchGeometry,
    mixture: GaussianMixture,
    params: RegParams,
    scaled: GaussianMixture,
}

impl GmMrfModel {
    pub fn new(geometry: PatchGeometry, mixture: GaussianMixture, params: RegParams) -> Result<Self> {
        if mixture.dim() != geometry.len() {
            return Err(Error::dims("mixture dimension vs patch size", geometry.len(), mixture.dim()));
        }
        params.validate()?;
        let scaled = apply_covariance_scaling(&mixture, params.p, params.alpha)?;
        Ok(Self { geometry, mixture, params, scaled })
    }

    /// Same trained mixture under different regularization parameters.
    pub fn with_params(&self, params: RegParams) -> Result<Self> {
        Self::new(self.geometry, self.mixture.clone(), params)
    }

    pub fn geometry(&self) -> PatchGeometry {
        self.geometry
    }

    /// The trained (unscaled) mixture.
    pub fn mixture(&self) -> &GaussianMixture {
        &self.mixture
    }

    /// The covariance-scaled mixture used by all evaluations.
    pub fn scaled_mixture(&self) -> &GaussianMixture {
        &self.scaled
    }

    pub fn params(&self) -> RegParams {
        self.params
    }

    pub fn sigma_x(&self) -> f64 {
        self.params.sigma_x
    }

    pub fn component_scales(&self) -> Vec<f64> {
        component_scales(&self.mixture, self.params.p, self.params.alpha).expect("validated params")
    }

    /// Factor in front of the patch-potential sum, `1 / (L sigma_x^2)`.
    pub fn energy_scale(&self) -> f64 {
        1.0 / (self.geometry.len() as f64 * self.params.sigma_x * self.params.sigma_x)
    }

    fn interior(&self, image: &Image) -> Result<InteriorCenters> {
        self.geometry.check_fits(image)?;
        Ok(self.geometry.interior(image.height(), image.width()))
    }

    /// Prior energy `u(x)` summed over interior patch centres.
    pub fn energy(&self, image: &Image) -> Result<f64> {
        if image.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        let centers = self.interior(image)?;
        let rows = self.row_sums(image, &centers, |mix, patch, ws| -mix.log_density_with(patch, ws));
        Ok(self.energy_scale() * pairwise_sum(&rows))
    }

    /// Sums `f` over each row of centres in parallel; returns per-row sums in row order.
    fn row_sums<F>(&self, image: &Image, centers: &InteriorCenters, f: F) -> Vec<f64>
    where
        F: Fn(&GaussianMixture, &[f64], &mut Workspace) -> f64 + Sync,
    {
        (centers.row_lo..centers.row_hi)
            .into_par_iter()
            .map(|r| {
                let mut ws = Workspace::new(&self.scaled);
                let mut patch = vec![0.0; self.geometry.len()];
                let mut acc = 0.0;
                for c in centers.col_lo..centers.col_hi {
                    self.geometry.extract(image, r, c, &mut patch);
                    acc += f(&self.scaled, &patch, &mut ws);
                }
                acc
            })
            .collect()
    }

    /// Responsibilities of every interior patch of `anchor` under the scaled mixture.
    pub fn anchor(&self, anchor: &Image) -> Result<PatchWeights> {
        let centers = self.interior(anchor)?;
        if anchor.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("anchor image contains non-finite values"));
        }
        let k = self.scaled.n_components();
        let ncols = centers.col_hi - centers.col_lo;
        let rows: Vec<Result<Vec<f64>>> = (centers.row_lo..centers.row_hi)
            .into_par_iter()
            .map(|r| {
                let mut ws = Workspace::new(&self.scaled);
                let mut patch = vec![0.0; self.geometry.len()];
                let mut out = vec![0.0; ncols * k];
                for (i, c) in (centers.col_lo..centers.col_hi).enumerate() {
                    self.geometry.extract(anchor, r, c, &mut patch);
                    self.scaled.responsibilities_into(&patch, &mut ws, &mut out[i * k..(i + 1) * k])?;
                }
                Ok(out)
            })
            .collect();
        let mut weights = Vec::with_capacity(centers.count() * k);
        for row in rows {
            weights.extend(row?);
        }
        Ok(PatchWeights { centers, k, weights })
    }

    /// Majorizer of [`energy`](Self::energy) anchored at `anchor`, including its constant,
    /// so that `surrogate_energy(x', x') == energy(x')`.
    pub fn surrogate_energy(&self, x: &Image, anchor: &Image) -> Result<f64> {
        x.check_same_shape(anchor)?;
        let weights = self.anchor(anchor)?;
        self.surrogate_energy_with(x, anchor, &weights)
    }

    /// As [`surrogate_energy`](Self::surrogate_energy) with precomputed anchor weights.
    pub fn surrogate_energy_with(&self, x: &Image, anchor: &Image, weights: &PatchWeights) -> Result<f64> {
        x.check_same_shape(anchor)?;
        let centers = self.interior(x)?;
        if centers != weights.centers {
            return Err(Error::invalid("anchor weights were computed for a different image shape"));
        }
        let k = self.scaled.n_components();
        let rows: Vec<f64> = (centers.row_lo..centers.row_hi)
            .into_par_iter()
            .map(|r| {
                let mut ws = Workspace::new(&self.scaled);
                let mut px = vec![0.0; self.geometry.len()];
                let mut pa = vec![0.0; self.geometry.len()];
                let mut dx = vec![0.0; k];
                let mut da = vec![0.0; k];
                let mut acc = 0.0;
                for c in centers.col_lo..centers.col_hi {
                    self.geometry.extract(x, r, c, &mut px);
                    self.geometry.extract(anchor, r, c, &mut pa);
                    let w = weights.get(r, c);
                    self.scaled.mahalanobis_all(&px, &mut dx, &mut ws.solve);
                    self.scaled.mahalanobis_all(&pa, &mut da, &mut ws.solve);
                    let v_anchor = -self.scaled.log_density_with(&pa, &mut ws);
                    let delta: f64 = w
                        .iter()
                        .zip(dx.iter().zip(&da))
                        .filter(|(wk, _)| **wk > 0.0)
                        .map(|(wk, (a, b))| wk * (a - b))
                        .sum();
                    acc += v_anchor + 0.5 * delta;
                }
                acc
            })
            .collect();
        Ok(self.energy_scale() * pairwise_sum(&rows))
    }
}

/// Per-patch responsibilities for all interior centres of one image.
#[derive(Clone, Debug)]
pub struct PatchWeights {
    centers: InteriorCenters,
    k: usize,
    weights: Vec<f64>,
}

impl PatchWeights {
    pub fn centers(&self) -> InteriorCenters {
        self.centers
    }

    pub fn n_components(&self) -> usize {
        self.k
    }

    /// Weights of the patch centred at `(row, col)`, which must be interior.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &[f64] {
        let ncols = self.centers.col_hi - self.centers.col_lo;
        let i = (row - self.centers.row_lo) * ncols + (col - self.centers.col_lo);
        &self.weights[i * self.k..(i + 1) * self.k]
    }

    /// Largest per-patch responsibility entropy, in nats.
    pub fn max_entropy(&self) -> f64 {
        self.weights
            .chunks(self.k)
            .map(|w| -w.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mixture::GaussianComponent;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(rng: &mut impl Rng, k: usize, side: usize, params: RegParams) -> GmMrfModel {
        let g = PatchGeometry::square(side).unwrap();
        let l = g.len();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let comps = raw
            .iter()
            .map(|w| {
                let a = DMatrix::from_fn(l, l, |_, _| rng.random_range(-1.0..1.0));
                let cov = (&a * a.transpose() + DMatrix::identity(l, l)) * rng.random_range(1.0..50.0);
                let mean = (0..l).map(|_| rng.random_range(-20.0..20.0)).collect();
                GaussianComponent::new(w / s, mean, cov).unwrap()
            })
            .collect();
        GmMrfModel::new(g, GaussianMixture::new(comps).unwrap(), params).unwrap()
    }

    fn random_image(rng: &mut impl Rng, h: usize, w: usize, amp: f64) -> Image {
        Image::from_fn(w, h, 1.0, |_, _| rng.random_range(-amp..amp))
    }

    #[test]
    fn pixelwise_standard_normal_energy() {
        let mix = GaussianMixture::single(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let model = GmMrfModel::new(PatchGeometry::square(1).unwrap(), mix, RegParams::default()).unwrap();
        let e = model.energy(&Image::zeros(2, 2)).unwrap();
        assert!((e - 3.675754).abs() < 1e-6);
    }

    #[test]
    fn sigma_x_scales_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m1 = random_model(&mut rng, 3, 3, RegParams { sigma_x: 1.0, p: 0.5, alpha: 5.0 });
        let m2 = m1.with_params(RegParams { sigma_x: 2.0, ..m1.params() }).unwrap();
        let x = random_image(&mut rng, 8, 8, 20.0);
        let (e1, e2) = (m1.energy(&x).unwrap(), m2.energy(&x).unwrap());
        assert!((e2 - 0.25 * e1).abs() <= 1e-12 * e1.abs());
    }

    #[test]
    fn energy_matches_direct_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let model = random_model(&mut rng, 3, 3, RegParams::default());
            let x = random_image(&mut rng, 8, 8, 20.0);
            let mut oracle = 0.0;
            for r in 1..7 {
                for c in 1..7 {
                    let patch: Vec<f64> =
                        (0..3).flat_map(|dr| (0..3).map(move |dc| (r + dr - 1, c + dc - 1))).map(|(a, b)| x.get(a, b)).collect();
                    oracle += model.scaled_mixture().potential(&patch).unwrap();
                }
            }
            oracle /= 9.0;
            let e = model.energy(&x).unwrap();
            assert!((e - oracle).abs() <= 1e-9 * oracle.abs());
        }
    }

    #[test]
    fn rejects_image_smaller_than_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(&mut rng, 2, 3, RegParams::default());
        assert!(model.energy(&Image::zeros(2, 5)).is_err());
    }

    #[test]
    fn surrogate_touches_and_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = random_model(&mut rng, 4, 3, RegParams { sigma_x: 0.7, p: 0.5, alpha: 4.0 });
        for _ in 0..20 {
            let xa = random_image(&mut rng, 6, 7, 20.0);
            let x = random_image(&mut rng, 6, 7, 20.0);
            let e_anchor = model.energy(&xa).unwrap();
            assert!((model.surrogate_energy(&xa, &xa).unwrap() - e_anchor).abs() < 1e-9 * e_anchor.abs().max(1.0));
            assert!(model.surrogate_energy(&x, &xa).unwrap() >= model.energy(&x).unwrap() - 1e-9);
        }
    }

    #[test]
    fn single_component_surrogate_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 1, 3, RegParams::default());
        let xa = random_image(&mut rng, 5, 5, 10.0);
        let x = random_image(&mut rng, 5, 5, 10.0);
        let (s, e) = (model.surrogate_energy(&x, &xa).unwrap(), model.energy(&x).unwrap());
        assert!((s - e).abs() < 1e-9 * e.abs().max(1.0));
    }

    #[test]
    fn anchor_matches_per_patch_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = random_model(&mut rng, 3, 3, RegParams { sigma_x: 1.0, p: 1.0, alpha: 3.0 });
        let x = random_image(&mut rng, 6, 6, 20.0);
        let w = model.anchor(&x).unwrap();
        let mut patch = vec![0.0; 9];
        for (r, c) in w.centers().iter() {
            model.geometry().extract(&x, r, c, &mut patch);
            let direct = model.scaled_mixture().responsibilities(&patch).unwrap();
            assert_eq!(direct.as_slice(), w.get(r, c));
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let mix = GaussianMixture::single(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let g = PatchGeometry::square(1).unwrap();
        assert!(GmMrfModel::new(g, mix.clone(), RegParams { sigma_x: 0.0, ..Default::default() }).is_err());
        assert!(GmMrfModel::new(g, mix.clone(), RegParams { p: 2.0, ..Default::default() }).is_err());
        assert!(GmMrfModel::new(PatchGeometry::square(3).unwrap(), mix, RegParams::default()).is_err());
    }
}
