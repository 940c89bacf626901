//! Quadratic-majorizer construction for `-log` of an exponential mixture
//! `f(x) = sum_k w_k exp(-v_k(x))`.
//!
//! The majorizer anchored at `x'` is
//! `q(x; x') = -log f(x') + sum_k pi_k (v_k(x) - v_k(x'))` with
//! `pi_k` the normalized terms of `f` at `x'`. It touches `-log f` at the anchor
//! and lies above it everywhere (Jensen on the convex `-log`).

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

fn log_terms(weights: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != v.len() {
        return Err(Error::dims("exponent count", weights.len(), v.len()));
    }
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid("exponential-mixture weights must be finite and non-negative"));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::invalid("exponential-mixture weights must have a positive sum"));
    }
    Ok(weights.iter().zip(v).map(|(w, vk)| w.ln() - vk).collect())
}

/// `-log sum_k w_k exp(-v_k)`.
pub fn neg_log_exp_mixture(weights: &[f64], v: &[f64]) -> Result<f64> {
    Ok(-log_sum_exp(&log_terms(weights, v)?))
}

/// Normalized terms `pi_k` of the mixture at the anchor.
pub fn exp_mixture_posteriors(weights: &[f64], v_anchor: &[f64]) -> Result<Vec<f64>> {
    let t = log_terms(weights, v_anchor)?;
    let lse = log_sum_exp(&t);
    if !lse.is_finite() {
        return Err(Error::Numerical("exponential mixture is zero or infinite at the anchor".into()));
    }
    Ok(t.iter().map(|x| (x - lse).exp()).collect())
}

/// Majorizer `q(x; x')` given the exponents evaluated at `x` and at the anchor `x'`.
pub fn exp_mixture_surrogate(weights: &[f64], v_x: &[f64], v_anchor: &[f64]) -> Result<f64> {
    if v_x.len() != v_anchor.len() {
        return Err(Error::dims("exponent count", v_anchor.len(), v_x.len()));
    }
    let pi = exp_mixture_posteriors(weights, v_anchor)?;
    let at_anchor = neg_log_exp_mixture(weights, v_anchor)?;
    let delta: f64 = pi
        .iter()
        .zip(v_x.iter().zip(v_anchor))
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, (a, b))| p * (a - b))
        .sum();
    Ok(at_anchor + delta)
}
