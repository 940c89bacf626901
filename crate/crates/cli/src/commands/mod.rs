pub mod denoise;
pub mod eval;
pub mod reconstruct;
pub mod scale;
pub mod simulate;
pub mod train;

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use gmmrf_core::model::{load_model, GmMrfModel};
use gmmrf_core::optimizer::{MapResult, SolverOptions};
use gmmrf_core::HU_AIR;

use crate::config::{require_file, OrderSpec, RegOverrides};
use crate::manifest::Manifest;

/// Writes one value per line.
pub fn write_trace(path: &Path, values: &[f64]) -> Result<()> {
    let mut s = String::new();
    for v in values {
        writeln!(s, "{v}").expect("writing to a String");
    }
    std::fs::write(path, s).with_context(|| format!("writing trace {}", path.display()))
}

pub fn open_model(path: &Path, overrides: &RegOverrides) -> Result<GmMrfModel> {
    require_file(path, "model")?;
    let model = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    if overrides.is_empty() {
        return Ok(model);
    }
    Ok(model.with_params(overrides.apply(model.params()))?)
}

pub fn solver_options(order: OrderSpec, seed: u64, clamp: bool, report_entropy: bool) -> SolverOptions {
    SolverOptions { order: order.to_order(seed), lower_bound: clamp.then_some(HU_AIR), report_entropy }
}

/// Records the outcome of a MAP run in the manifest and on stdout.
pub fn summarize_map(result: &MapResult, manifest: &mut Manifest) {
    let last = *result.objective.last().expect("objective has the initial value");
    println!(
        "outer iterations: {}, converged: {}, objective: {} -> {}, skipped updates: {}",
        result.outer_iters, result.converged, result.objective[0], last, result.skipped_updates
    );
    manifest
        .extra("outer_iters", result.outer_iters as i64)
        .extra("converged", result.converged)
        .extra("initial_objective", result.objective[0])
        .extra("final_objective", last)
        .extra("skipped_updates", result.skipped_updates as i64);
}
