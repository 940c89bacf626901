//! Gaussian mixture over flattened patch vectors.
//!
//! Every density evaluation runs in the log domain. Quadratic forms are taken
//! against the cached Cholesky factor of each covariance with a forward
//! substitution, so no covariance is ever inverted explicitly for density
//! work. The precision matrix is cached separately (built from the same
//! factor) because the coordinate-descent update needs individual rows of it.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Relative diagonal loading applied when a covariance fails to factor.
pub const COVARIANCE_FLOOR_EPS: f64 = 1e-8;

/// One weighted Gaussian with cached factorization.
#[derive(Clone, Debug)]
pub struct GaussianComponent {
    weight: f64,
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    /// Lower Cholesky factor, row-major.
    chol: Vec<f64>,
    /// Inverse covariance, row-major.
    precision: Vec<f64>,
    log_det: f64,
    /// `log(weight) - L/2 log(2 pi) - 1/2 log|R|`.
    log_norm: f64,
}

impl GaussianComponent {
    /// Builds a component, flooring the covariance by `1e-8 * mean eigenvalue`
    /// on the diagonal if the first factorization attempt fails.
    pub fn new(weight: f64, mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let l = mean.len();
        if l == 0 {
            return Err(Error::invalid("component dimension must be positive"));
        }
        if covariance.nrows() != l || covariance.ncols() != l {
            return Err(Error::dims("covariance side", l, covariance.nrows()));
        }
        if !(weight.is_finite() && (0.0..=1.0).contains(&weight)) {
            return Err(Error::invalid(format!("component weight must lie in [0, 1], got {weight}")));
        }
        if mean.iter().any(|v| !v.is_finite()) || covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("component parameters must be finite"));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::NotPositiveDefinite(format!("covariance is not symmetric (|R - R^T| = {asym:e})")));
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;

        let covariance = match covariance.clone().cholesky() {
            Some(_) => covariance,
            None => {
                let mean_eig = covariance.trace() / l as f64;
                if !(mean_eig > 0.0) {
                    return Err(Error::NotPositiveDefinite("covariance has non-positive trace".into()));
                }
                let mut floored = covariance;
                for i in 0..l {
                    floored[(i, i)] += COVARIANCE_FLOOR_EPS * mean_eig;
                }
                floored
            }
        };
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("covariance factorization failed after flooring".into()))?;
        let lower = chol.l();
        let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite("covariance determinant is not finite".into()));
        }
        let precision = chol.inverse();
        let mut chol_rm = vec![0.0; l * l];
        let mut prec_rm = vec![0.0; l * l];
        for i in 0..l {
            for j in 0..l {
                chol_rm[i * l + j] = lower[(i, j)];
                // symmetrize away round-off in the inverse
                prec_rm[i * l + j] = 0.5 * (precision[(i, j)] + precision[(j, i)]);
            }
        }
        let log_norm = weight.ln() - 0.5 * l as f64 * (2.0 * PI).ln() - 0.5 * log_det;
        Ok(Self { weight, mean, covariance, chol: chol_rm, precision: prec_rm, log_det, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Row-major lower Cholesky factor of the covariance.
    pub fn chol(&self) -> &[f64] {
        &self.chol
    }

    /// Row-major precision matrix.
    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    /// Row `i` of the precision matrix.
    #[inline]
    pub fn precision_row(&self, i: usize) -> &[f64] {
        let l = self.dim();
        &self.precision[i * l..(i + 1) * l]
    }

    /// `log(weight) - L/2 log(2 pi) - 1/2 log|R|`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn with_weight(&self, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && (0.0..=1.0).contains(&weight)) {
            return Err(Error::invalid(format!("component weight must lie in [0, 1], got {weight}")));
        }
        let mut c = self.clone();
        c.log_norm = weight.ln() - 0.5 * self.dim() as f64 * (2.0 * PI).ln() - 0.5 * self.log_det;
        c.weight = weight;
        Ok(c)
    }

    /// `(x - mu)^T R^{-1} (x - mu)` by forward substitution; `scratch` must hold `L` values.
    #[inline]
    pub fn mahalanobis_sq(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let l = self.dim();
        debug_assert_eq!(x.len(), l);
        let mut acc = 0.0;
        for i in 0..l {
            let row = &self.chol[i * l..i * l + i];
            let mut s = x[i] - self.mean[i];
            for (lij, zj) in row.iter().zip(&scratch[..i]) {
                s -= lij * zj;
            }
            let zi = s / self.chol[i * l + i];
            scratch[i] = zi;
            acc += zi * zi;
        }
        acc
    }

    /// Log of the weighted component density at `x`.
    #[inline]
    pub fn log_weighted_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(x, scratch)
    }
}

/// A `K`-component Gaussian mixture over `L`-dimensional vectors.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    dim: usize,
}

impl GaussianMixture {
    /// Weights must sum to one within `1e-10`.
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let dim = first.dim();
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::dims("component dimension", dim, c.dim()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, expected 1")));
        }
        Ok(Self { components, dim })
    }

    /// A single Gaussian with weight one.
    pub fn single(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![GaussianComponent::new(1.0, mean, covariance)?])
    }

    /// Builds from raw parameters, checking shapes.
    pub fn from_parts(weights: &[f64], means: &[Vec<f64>], covariances: &[DMatrix<f64>]) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != covariances.len() {
            return Err(Error::invalid("weights, means and covariances must have equal counts"));
        }
        let comps = weights
            .iter()
            .zip(means)
            .zip(covariances)
            .map(|((&w, m), r)| GaussianComponent::new(w, m.clone(), r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    fn check_patch(&self, patch: &[f64]) -> Result<()> {
        if patch.len() != self.dim {
            return Err(Error::dims("patch length", self.dim, patch.len()));
        }
        if patch.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("patch contains non-finite values"));
        }
        Ok(())
    }

    /// Fills `out[k]` with `log(pi_k N(patch; mu_k, R_k))`. No input checks.
    #[inline]
    pub fn component_log_terms(&self, patch: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.log_weighted_density(patch, scratch);
        }
    }

    /// Fills `out[k]` with the squared Mahalanobis distance to component `k`.
    #[inline]
    pub fn mahalanobis_all(&self, patch: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.mahalanobis_sq(patch, scratch);
        }
    }

    /// `log g(patch)`.
    pub fn patch_log_density(&self, patch: &[f64]) -> Result<f64> {
        self.check_patch(patch)?;
        let mut scratch = Workspace::new(self);
        Ok(self.log_density_with(patch, &mut scratch))
    }

    /// Unchecked `log g(patch)` with caller-provided scratch space.
    #[inline]
    pub fn log_density_with(&self, patch: &[f64], ws: &mut Workspace) -> f64 {
        self.component_log_terms(patch, &mut ws.terms, &mut ws.solve);
        log_sum_exp(&ws.terms)
    }

    /// Patch potential `V(patch) = -log g(patch)`.
    pub fn potential(&self, patch: &[f64]) -> Result<f64> {
        Ok(-self.patch_log_density(patch)?)
    }

    /// Posterior component probabilities for `patch`.
    pub fn responsibilities(&self, patch: &[f64]) -> Result<Responsibilities> {
        self.check_patch(patch)?;
        let mut ws = Workspace::new(self);
        let mut out = vec![0.0; self.n_components()];
        self.responsibilities_into(patch, &mut ws, &mut out)?;
        Ok(Responsibilities(out))
    }

    /// Writes responsibilities into `out`; returns `log g(patch)`.
    pub fn responsibilities_into(&self, patch: &[f64], ws: &mut Workspace, out: &mut [f64]) -> Result<f64> {
        self.component_log_terms(patch, &mut ws.terms, &mut ws.solve);
        let lse = log_sum_exp(&ws.terms);
        if !lse.is_finite() {
            return Err(Error::Numerical("all component log-densities are -inf for this patch".into()));
        }
        for (o, t) in out.iter_mut().zip(&ws.terms) {
            *o = (t - lse).exp();
        }
        Ok(lse)
    }
}

/// Reusable per-thread buffers for mixture evaluation.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub(crate) terms: Vec<f64>,
    pub(crate) solve: Vec<f64>,
}

impl Workspace {
    pub fn new(mix: &GaussianMixture) -> Self {
        Self { terms: vec![0.0; mix.n_components()], solve: vec![0.0; mix.dim()] }
    }
}

/// Posterior component probabilities of one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities(pub Vec<f64>);

impl Responsibilities {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the most probable component.
    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
            .0
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>()
    }
}

/// Merges per-group mixtures into one, scaling each group's weights by its group weight.
pub fn merge_mixtures(parts: &[(f64, GaussianMixture)]) -> Result<GaussianMixture> {
    let (_, first) = parts.first().ok_or_else(|| Error::invalid("nothing to merge"))?;
    let dim = first.dim();
    let mut total = 0.0;
    for (w, m) in parts {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::invalid(format!("group weight must be non-negative, got {w}")));
        }
        if m.dim() != dim {
            return Err(Error::invalid(format!("cannot merge mixtures of dimension {dim} and {}", m.dim())));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("group weights sum to {total}, expected 1")));
    }
    let mut comps = Vec::with_capacity(parts.iter().map(|(_, m)| m.n_components()).sum());
    for (w, m) in parts {
        for c in m.components() {
            comps.push(c.with_weight(w * c.weight())?);
        }
    }
    GaussianMixture::new(comps)
}
