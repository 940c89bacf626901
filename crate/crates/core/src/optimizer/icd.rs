//! Iterative coordinate descent on the quadratic majorizer.
//!
//! With the responsibilities frozen at an anchor, each pixel update solves the
//! 1-D quadratic exactly:
//!
//! ```text
//! theta1 = -A_j^T D e          theta2 = A_j^T D A_j
//! phi1   = c sum_{r in S_j} sum_k w_rk [R_k^-1 (P_r x - mu_k)]_pos(j)
//! phi2   = c sum_{r in S_j} sum_k w_rk [R_k^-1]_pos(j),pos(j)
//! x_j   <- x_j - (theta1 + phi1) / (theta2 + phi2)
//! ```
//!
//! where `c = 1 / (L sigma_x^2)`, `R_k` are the scaled covariances, `S_j` the
//! interior patches covering pixel `j` and `e = y - A x` is kept up to date.

use rayon::prelude::*;

use super::problem::{Forward, MapProblem};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{GmMrfModel, PatchWeights};

/// Solver state: current image, running residual and anchored responsibilities.
#[derive(Clone, Debug)]
pub struct IcdState {
    x: Image,
    e: Vec<f64>,
    weights: PatchWeights,
    skipped: usize,
}

/// Terms of one coordinate update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelUpdate {
    pub theta1: f64,
    pub theta2: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// New minus old pixel value.
    pub delta: f64,
    /// True when the curvature was not positive and the pixel was left alone.
    pub skipped: bool,
}

impl IcdState {
    /// Starts at `x` with responsibilities anchored at `x`.
    pub fn new(problem: &MapProblem, x: Image) -> Result<Self> {
        let weights = problem.model().anchor(&x)?;
        Self::with_weights(problem, x, weights)
    }

    /// Starts at `x` with externally supplied responsibilities.
    pub fn with_weights(problem: &MapProblem, x: Image, weights: PatchWeights) -> Result<Self> {
        problem.check_image(&x)?;
        let model = problem.model();
        if weights.centers() != model.geometry().interior(x.height(), x.width()) {
            return Err(Error::invalid("responsibilities do not match the image shape"));
        }
        if weights.n_components() != model.scaled_mixture().n_components() {
            return Err(Error::dims("responsibility width", model.scaled_mixture().n_components(), weights.n_components()));
        }
        let e = problem.residual(&x)?;
        Ok(Self { x, e, weights, skipped: 0 })
    }

    /// Re-anchors the responsibilities at the current image.
    pub fn reanchor(&mut self, problem: &MapProblem) -> Result<()> {
        self.weights = problem.model().anchor(&self.x)?;
        Ok(())
    }

    pub fn x(&self) -> &Image {
        &self.x
    }

    pub fn into_image(self) -> Image {
        self.x
    }

    /// Running residual `y - A x`.
    pub fn residual(&self) -> &[f64] {
        &self.e
    }

    pub fn weights(&self) -> &PatchWeights {
        &self.weights
    }

    /// Number of updates skipped for non-positive curvature so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Largest deviation of the running residual from a fresh `y - A x`.
    pub fn residual_drift(&self, problem: &MapProblem) -> Result<f64> {
        let fresh = problem.residual(&self.x)?;
        Ok(fresh.iter().zip(&self.e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Checks `||e - (y - A x)||_inf <= 1e-8 (1 + ||y||_inf)` and resynchronizes `e`.
    pub fn check_residual(&mut self, problem: &MapProblem) -> Result<()> {
        let fresh = problem.residual(&self.x)?;
        let drift = fresh.iter().zip(&self.e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ymax = problem.y().iter().map(|v| v.abs()).fold(0.0, f64::max);
        if drift > 1e-8 * (1.0 + ymax) {
            return Err(Error::Numerical(format!("residual drifted by {drift:e} from y - A x")));
        }
        self.e = fresh;
        Ok(())
    }
}

/// Prior gradient and curvature `(phi1, phi2)` at pixel `(row, col)`.
fn prior_terms(model: &GmMrfModel, weights: &PatchWeights, x: &Image, row: usize, col: usize, patch: &mut [f64]) -> (f64, f64) {
    let g = model.geometry();
    let mix = model.scaled_mixture();
    let centers = weights.centers();
    let (hr, hc) = (g.half_rows(), g.half_cols());
    let r_lo = row.saturating_sub(hr).max(centers.row_lo);
    let r_hi = (row + hr + 1).min(centers.row_hi);
    let c_lo = col.saturating_sub(hc).max(centers.col_lo);
    let c_hi = (col + hc + 1).min(centers.col_hi);
    let (mut phi1, mut phi2) = (0.0, 0.0);
    for r in r_lo..r_hi {
        for c in c_lo..c_hi {
            g.extract(x, r, c, patch);
            let pos = (row + hr - r) * g.cols() + (col + hc - c);
            for (comp, &w) in mix.components().iter().zip(weights.get(r, c)) {
                if w == 0.0 {
                    continue;
                }
                let prow = comp.precision_row(pos);
                let grad: f64 = prow.iter().zip(patch.iter().zip(comp.mean())).map(|(p, (v, m))| p * (v - m)).sum();
                phi1 += w * grad;
                phi2 += w * prow[pos];
            }
        }
    }
    let s = model.energy_scale();
    (s * phi1, s * phi2)
}

/// Exact 1-D minimization of the majorized cost in pixel `j`.
///
/// `lower_bound` clamps the new value from below (the feasible set constraint).
pub fn icd_pixel_update(state: &mut IcdState, j: usize, problem: &MapProblem, lower_bound: Option<f64>) -> Result<PixelUpdate> {
    if j >= problem.n_pixels() {
        return Err(Error::invalid(format!("pixel index {j} out of range 0..{}", problem.n_pixels())));
    }
    let d = problem.weights();
    let (theta1, theta2) = match problem.forward() {
        Forward::Identity => (-d[j] * state.e[j], d[j]),
        Forward::Projector(a) => {
            let (rows, vals) = a.column_unchecked(j);
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                let i = i as usize;
                t1 -= v * d[i] * state.e[i];
                t2 += v * v * d[i];
            }
            (t1, t2)
        }
    };
    let w = state.x.width();
    let (row, col) = (j / w, j % w);
    let mut patch = vec![0.0; problem.model().geometry().len()];
    let (phi1, phi2) = prior_terms(problem.model(), &state.weights, &state.x, row, col, &mut patch);

    let curvature = theta2 + phi2;
    if !(curvature > 0.0) || !curvature.is_finite() {
        state.skipped += 1;
        return Ok(PixelUpdate { theta1, theta2, phi1, phi2, delta: 0.0, skipped: true });
    }
    let old = state.x.data()[j];
    let mut new = old - (theta1 + phi1) / curvature;
    if let Some(lb) = lower_bound {
        new = new.max(lb);
    }
    let delta = new - old;
    if !delta.is_finite() {
        return Err(Error::Numerical(format!("non-finite update at pixel {j}")));
    }
    if delta != 0.0 {
        state.x.data_mut()[j] = new;
        match problem.forward() {
            Forward::Identity => state.e[j] -= delta,
            Forward::Projector(a) => {
                let (rows, vals) = a.column_unchecked(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    state.e[i as usize] -= v * delta;
                }
            }
        }
    }
    Ok(PixelUpdate { theta1, theta2, phi1, phi2, delta, skipped: false })
}

/// One pass over `order`; returns the largest absolute pixel change.
pub fn icd_sweep(state: &mut IcdState, problem: &MapProblem, order: &[usize], lower_bound: Option<f64>) -> Result<f64> {
    let mut max_change: f64 = 0.0;
    for &j in order {
        let u = icd_pixel_update(state, j, problem, lower_bound)?;
        max_change = max_change.max(u.delta.abs());
    }
    Ok(max_change)
}

/// Colour-parallel sweep for identity forward models.
///
/// Pixels sharing a colour `(row mod patch_rows, col mod patch_cols)` never
/// appear in a common patch neighbourhood, so their updates are independent
/// and match any sequential order within the colour.
pub fn icd_sweep_colored(state: &mut IcdState, problem: &MapProblem, lower_bound: Option<f64>) -> Result<f64> {
    if !matches!(problem.forward(), Forward::Identity) {
        return Err(Error::invalid("colour-parallel sweeps require an identity forward model"));
    }
    let g = problem.model().geometry();
    // neighbourhood of a pixel spans 2*half+1 = patch side in each direction
    let (pr, pc) = (2 * g.half_rows() + 1, 2 * g.half_cols() + 1);
    let (h, w) = (state.x.height(), state.x.width());
    let d = problem.weights();
    let mut max_change: f64 = 0.0;
    for cr in 0..pr {
        for cc in 0..pc {
            let pixels: Vec<usize> =
                (cr..h).step_by(pr).flat_map(|r| (cc..w).step_by(pc).map(move |c| r * w + c)).collect();
            let updates: Vec<(usize, f64, f64, bool)> = {
                let st = &*state;
                pixels
                    .par_iter()
                    .map(|&j| {
                        let mut patch = vec![0.0; g.len()];
                        let (phi1, phi2) = prior_terms(problem.model(), &st.weights, &st.x, j / w, j % w, &mut patch);
                        let curvature = d[j] + phi2;
                        if !(curvature > 0.0) || !curvature.is_finite() {
                            return (j, 0.0, 0.0, true);
                        }
                        let old = st.x.data()[j];
                        let mut new = old - (-d[j] * st.e[j] + phi1) / curvature;
                        if let Some(lb) = lower_bound {
                            new = new.max(lb);
                        }
                        (j, new, new - old, false)
                    })
                    .collect()
            };
            for (j, new, delta, skipped) in updates {
                if skipped {
                    state.skipped += 1;
                    continue;
                }
                if !delta.is_finite() {
                    return Err(Error::Numerical(format!("non-finite update at pixel {j}")));
                }
                state.x.data_mut()[j] = new;
                state.e[j] -= delta;
                max_change = max_change.max(delta.abs());
            }
        }
    }
    Ok(max_change)
}
