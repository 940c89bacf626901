//! Covariance control: compress the per-component average eigenvalue toward `alpha^2`.

use nalgebra::DMatrix;

use super::mixture::{GaussianComponent, GaussianMixture};
use crate::error::{Error, Result};

/// Geometric mean of the eigenvalues, `|R|^(1/L)`, from a Cholesky log-determinant.
pub fn average_eigenvalue(r: &DMatrix<f64>) -> Result<f64> {
    let l = r.nrows();
    if l == 0 || r.ncols() != l {
        return Err(Error::invalid("average eigenvalue needs a non-empty square matrix"));
    }
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("average eigenvalue of a non-SPD matrix".into()))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok((log_det / l as f64).exp())
}

/// `|R_k|^(1/L)` from the cached log-determinant.
pub fn component_average_eigenvalue(c: &GaussianComponent) -> f64 {
    (c.log_det() / c.dim() as f64).exp()
}

pub fn check_scaling_params(p: f64, alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("compression rate p must lie in [0, 1], got {p}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("stationary scale alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Per-component regularization scale `sigma_k = (lambda_k / alpha^2)^(p/2)`.
pub fn component_scales(mix: &GaussianMixture, p: f64, alpha: f64) -> Result<Vec<f64>> {
    check_scaling_params(p, alpha)?;
    Ok(mix
        .components()
        .iter()
        .map(|c| (component_average_eigenvalue(c) / (alpha * alpha)).powf(p / 2.0))
        .collect())
}

/// Returns the mixture with covariances `R_k / sigma_k^2`; weights and means unchanged.
pub fn apply_covariance_scaling(mix: &GaussianMixture, p: f64, alpha: f64) -> Result<GaussianMixture> {
    let scales = component_scales(mix, p, alpha)?;
    let comps = mix
        .components()
        .iter()
        .zip(&scales)
        .map(|(c, &s)| {
            let cov = if s == 1.0 { c.covariance().clone() } else { c.covariance() / (s * s) };
            GaussianComponent::new(c.weight(), c.mean().to_vec(), cov)
        })
        .collect::<Result<Vec<_>>>()?;
    GaussianMixture::new(comps)
}
