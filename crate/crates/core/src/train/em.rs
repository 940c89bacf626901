//! Expectation-maximization for full-covariance Gaussian mixtures.
//!
//! The covariance floor `eps` is applied as an exact M-step: each component
//! density carries the factor `exp(-eps/2 tr(R^-1))`, whose maximizer is
//! `R = S + eps I`. The reported objective is the average log of that floored
//! mixture, which EM never decreases. With `eps = 0` it is the plain average
//! log-likelihood.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::patches::PatchDataset;
use crate::error::{Error, Result};
use crate::model::{GaussianComponent, GaussianMixture};
use crate::numeric::{log_sum_exp, pairwise_sum};

const CHUNK: usize = 512;

/// Responsibility mass below which a component counts as empty.
const EMPTY_MASS: f64 = 1e-8;

fn default_max_iters() -> usize {
    200
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_floor() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once the relative change of the objective falls to this level.
    #[serde(default = "default_tolerance")]
    pub ll_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Diagonal loading added to every fitted covariance, data units squared.
    #[serde(default = "default_floor")]
    pub covariance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iters: default_max_iters(), ll_tolerance: default_tolerance(), seed: 0, covariance_floor: default_floor() }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("EM max_iters must be at least 1"));
        }
        if !(self.ll_tolerance > 0.0) {
            return Err(Error::invalid("EM ll_tolerance must be positive"));
        }
        if !(self.covariance_floor >= 0.0 && self.covariance_floor.is_finite()) {
            return Err(Error::invalid("EM covariance_floor must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Objective before the first M-step and after each one.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Iterations (1-based M-step numbers) in which an empty component was re-seeded.
    pub rescues: Vec<usize>,
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<DMatrix<f64>>,
}

impl Params {
    fn build(&self) -> Result<GaussianMixture> {
        let total: f64 = self.weights.iter().sum();
        let comps = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.covs)
            .map(|((w, m), r)| GaussianComponent::new(w / total, m.clone(), r.clone()))
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(comps)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_and_cov<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> (Vec<f64>, DMatrix<f64>, usize) {
    let mut mean = vec![0.0; dim];
    let mut n = 0usize;
    for r in rows.clone() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
        n += 1;
    }
    for m in &mut mean {
        *m /= n.max(1) as f64;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    let mut d = vec![0.0; dim];
    for r in rows {
        for ((di, v), m) in d.iter_mut().zip(r).zip(&mean) {
            *di = v - m;
        }
        for i in 0..dim {
            for j in 0..=i {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[(i, j)] / n.max(1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov, n)
}

fn add_floor(mut r: DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    for i in 0..r.nrows() {
        r[(i, i)] += eps;
    }
    r
}

/// k-means++ seeding followed by one hard assignment.
fn kmeanspp_init(data: &PatchDataset, k: usize, eps: f64, rng: &mut impl Rng) -> Params {
    let n = data.len();
    let dim = data.dim();
    let mut centers: Vec<usize> = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = data.rows().map(|r| sq_dist(r, data.row(centers[0]))).collect();
    while centers.len() < k {
        let total = pairwise_sum(&d2);
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &v) in d2.iter().enumerate() {
                acc += v;
                if acc > target && v > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(next);
        for (dv, r) in d2.iter_mut().zip(data.rows()) {
            *dv = dv.min(sq_dist(r, data.row(next)));
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in data.rows().enumerate() {
        let best = centers
            .iter()
            .enumerate()
            .map(|(c, &ci)| (c, sq_dist(r, data.row(ci))))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
            .0;
        members[best].push(i);
    }

    let (_, global_cov, _) = mean_and_cov(data.rows(), dim);
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for (c, idx) in members.iter().enumerate() {
        weights.push(idx.len().max(1) as f64 / n as f64);
        if idx.len() > dim {
            let (m, s, _) = mean_and_cov(idx.iter().map(|&i| data.row(i)), dim);
            means.push(m);
            covs.push(add_floor(s, eps));
        } else {
            means.push(data.row(centers[c]).to_vec());
            covs.push(add_floor(global_cov.clone(), eps));
        }
    }
    Params { weights, means, covs }
}

/// Fills `resp` (N x K, row-major) and returns the per-row log of the floored mixture.
fn e_step(data: &PatchDataset, mix: &GaussianMixture, penalties: &[f64], resp: &mut [f64]) -> Vec<f64> {
    let k = mix.n_components();
    let dim = data.dim();
    let chunk_ll: Vec<Vec<f64>> = data
        .as_flat()
        .par_chunks(CHUNK * dim)
        .zip(resp.par_chunks_mut(CHUNK * k))
        .map(|(rows, out)| {
            let mut terms = vec![0.0; k];
            let mut scratch = vec![0.0; dim];
            rows.chunks_exact(dim)
                .zip(out.chunks_exact_mut(k))
                .map(|(x, g)| {
                    mix.component_log_terms(x, &mut terms, &mut scratch);
                    for (t, p) in terms.iter_mut().zip(penalties) {
                        *t -= p;
                    }
                    let lse = log_sum_exp(&terms);
                    for (gi, t) in g.iter_mut().zip(&terms) {
                        *gi = (t - lse).exp();
                    }
                    lse
                })
                .collect()
        })
        .collect();
    chunk_ll.into_iter().flatten().collect()
}

/// Fits a `k`-component full-covariance mixture by EM.
pub fn em_fit(data: &PatchDataset, k: usize, cfg: &EmConfig) -> Result<EmFit> {
    cfg.validate()?;
    let n = data.len();
    let dim = data.dim();
    if k == 0 {
        return Err(Error::invalid("EM needs at least one component"));
    }
    if n < k {
        return Err(Error::invalid(format!("EM needs at least {k} samples, got {n}")));
    }
    let eps = cfg.covariance_floor;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = kmeanspp_init(data, k, eps, &mut rng);
    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();
    let mut rescues = Vec::new();
    let mut converged = false;

    for it in 0..=cfg.max_iters {
        let mix = params.build()?;
        let penalties: Vec<f64> = mix
            .components()
            .iter()
            .map(|c| 0.5 * eps * (0..dim).map(|i| c.precision()[i * dim + i]).sum::<f64>())
            .collect();
        let row_ll = e_step(data, &mix, &penalties, &mut resp);
        let obj = pairwise_sum(&row_ll) / n as f64;
        if !obj.is_finite() {
            return Err(Error::Numerical(format!("EM objective became non-finite at iteration {it}")));
        }
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (obj - prev).abs() <= cfg.ll_tolerance * prev.abs().max(1e-300) {
                trace.push(obj);
                converged = true;
                break;
            }
        }
        trace.push(obj);
        if it == cfg.max_iters {
            break;
        }

        // M-step, one component per task.
        let mass: Vec<f64> = (0..k)
            .map(|j| pairwise_sum(&resp.iter().skip(j).step_by(k).copied().collect::<Vec<_>>()))
            .collect();
        let updated: Vec<Option<(Vec<f64>, DMatrix<f64>)>> = (0..k)
            .into_par_iter()
            .map(|j| {
                if mass[j] < EMPTY_MASS {
                    return None;
                }
                let mut mean = vec![0.0; dim];
                for (x, g) in data.rows().zip(resp.chunks_exact(k)) {
                    let w = g[j];
                    for (m, v) in mean.iter_mut().zip(x) {
                        *m += w * v;
                    }
                }
                for m in &mut mean {
                    *m /= mass[j];
                }
                let mut cov = DMatrix::zeros(dim, dim);
                let mut d = vec![0.0; dim];
                for (x, g) in data.rows().zip(resp.chunks_exact(k)) {
                    let w = g[j];
                    if w == 0.0 {
                        continue;
                    }
                    for ((di, v), m) in d.iter_mut().zip(x).zip(&mean) {
                        *di = v - m;
                    }
                    for a in 0..dim {
                        let wa = w * d[a];
                        for b in 0..=a {
                            cov[(a, b)] += wa * d[b];
                        }
                    }
                }
                for a in 0..dim {
                    for b in 0..=a {
                        let v = cov[(a, b)] / mass[j];
                        cov[(a, b)] = v;
                        cov[(b, a)] = v;
                    }
                }
                Some((mean, add_floor(cov, eps)))
            })
            .collect();

        let mut weights = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        let mut covs = Vec::with_capacity(k);
        let mut rescued = false;
        for (j, u) in updated.into_iter().enumerate() {
            match u {
                Some((m, r)) => {
                    weights.push(mass[j] / n as f64);
                    means.push(m);
                    covs.push(r);
                }
                None => {
                    // re-seed on the patch the current model explains worst
                    rescued = true;
                    let worst = row_ll
                        .iter()
                        .enumerate()
                        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b })
                        .0;
                    let (_, global, _) = mean_and_cov(data.rows(), dim);
                    weights.push(1.0 / n as f64);
                    means.push(data.row(worst).to_vec());
                    covs.push(add_floor(global, eps));
                }
            }
        }
        if rescued {
            rescues.push(it + 1);
        }
        params = Params { weights, means, covs };
    }

    Ok(EmFit { mixture: params.build()?, objective_trace: trace, converged, rescues })
}
