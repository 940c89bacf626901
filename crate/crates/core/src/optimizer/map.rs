//! Majorization-minimization driver: anchor, sweep, re-anchor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::icd::{icd_sweep, icd_sweep_colored, IcdState};
use super::problem::{Forward, MapProblem};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::GmMrfModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopCriteria {
    /// Number of surrogate re-anchorings.
    pub outer_iters: usize,
    /// Full ICD passes per anchoring.
    pub inner_sweeps: usize,
    /// Stop once the largest pixel change of an outer iteration is below this (HU).
    pub rel_change_tol: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { outer_iters: 50, inner_sweeps: 1, rel_change_tol: 0.1 }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 || self.inner_sweeps == 0 {
            return Err(Error::invalid("iteration counts must be positive"));
        }
        if !(self.rel_change_tol >= 0.0) {
            return Err(Error::invalid("change tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    Raster,
    /// Fresh permutation per sweep from a generator seeded once.
    Shuffled(u64),
    /// Colour-parallel sweeps; identity forward model only.
    Colored,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SolverOptions {
    pub order: UpdateOrder,
    /// Per-pixel lower clamp, HU.
    pub lower_bound: Option<f64>,
    /// Record the largest per-patch responsibility entropy at every anchoring.
    pub report_entropy: bool,
}

#[derive(Clone, Debug)]
pub struct MapResult {
    pub image: Image,
    /// Exact MAP cost at the start and after each outer iteration.
    pub objective: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
    pub skipped_updates: usize,
    /// Largest responsibility entropy per anchoring, when requested.
    pub max_entropy: Vec<f64>,
}

/// Runs MM with ICD inner solves from `x_init`.
pub fn map_reconstruct(problem: &MapProblem, x_init: Image, stop: &StopCriteria, opts: &SolverOptions) -> Result<MapResult> {
    stop.validate()?;
    if matches!(opts.order, UpdateOrder::Colored) && !matches!(problem.forward(), Forward::Identity) {
        return Err(Error::invalid("colour-parallel sweeps require an identity forward model"));
    }
    problem.check_image(&x_init)?;
    let mut x_init = x_init;
    if let Some(lb) = opts.lower_bound {
        for v in x_init.data_mut() {
            *v = v.max(lb);
        }
    }
    let mut state = IcdState::new(problem, x_init)?;
    let mut objective = vec![problem.objective(state.x())?];
    let mut max_entropy = Vec::new();
    let n = problem.n_pixels();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = match opts.order {
        UpdateOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut converged = false;
    let mut outer = 0;

    while outer < stop.outer_iters {
        if outer > 0 {
            state.reanchor(problem)?;
        }
        if opts.report_entropy {
            max_entropy.push(state.weights().max_entropy());
        }
        let mut change: f64 = 0.0;
        for _ in 0..stop.inner_sweeps {
            let c = match opts.order {
                UpdateOrder::Colored => icd_sweep_colored(&mut state, problem, opts.lower_bound)?,
                _ => {
                    if let Some(rng) = rng.as_mut() {
                        order.shuffle(rng);
                    }
                    icd_sweep(&mut state, problem, &order, opts.lower_bound)?
                }
            };
            state.check_residual(problem)?;
            change = change.max(c);
        }
        outer += 1;
        objective.push(problem.objective(state.x())?);
        if change < stop.rel_change_tol {
            converged = true;
            break;
        }
    }
    let skipped_updates = state.skipped();
    Ok(MapResult { image: state.into_image(), objective, outer_iters: outer, converged, skipped_updates, max_entropy })
}

/// MAP denoising: identity forward model with `D = I / noise_sigma^2`, started at the noisy image.
pub fn denoise(noisy: &Image, noise_sigma: f64, model: &GmMrfModel, stop: &StopCriteria, opts: &SolverOptions) -> Result<MapResult> {
    let problem = MapProblem::denoising(noisy, noise_sigma, model)?;
    map_reconstruct(&problem, noisy.clone(), stop, opts)
}
