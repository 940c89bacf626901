#![allow(dead_code)]

use gmmrf_core::model::{GaussianMixture, GmMrfModel, PatchGeometry, RegParams};
use gmmrf_core::Image;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// SPD matrix `Q diag(e) Q^T` with eigenvalues drawn in `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let e = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| rng.random_range(lo..hi)));
    let m = &q * e * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Mixture with means scattered around `center` and covariance spectra in `[lo, hi]`.
pub fn random_mixture(rng: &mut ChaCha8Rng, k: usize, dim: usize, center: f64, spread: f64, lo: f64, hi: f64) -> GaussianMixture {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let base = center + rng.random_range(-spread..spread);
            (0..dim).map(|_| base + rng.random_range(-0.1 * spread..0.1 * spread)).collect()
        })
        .collect();
    let covs: Vec<DMatrix<f64>> = (0..k).map(|_| random_spd(rng, dim, lo, hi)).collect();
    GaussianMixture::from_parts(&weights, &means, &covs).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, k: usize, side: usize, params: RegParams) -> GmMrfModel {
    let g = PatchGeometry::square(side).unwrap();
    let mix = random_mixture(rng, k, g.len(), 0.0, 60.0, 50.0, 2500.0);
    GmMrfModel::new(g, mix, params).unwrap()
}

pub fn noisy_image(rng: &mut ChaCha8Rng, clean: &Image, sigma: f64) -> Image {
    let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
    clean.map(|v| v + rng.sample(normal))
}

pub fn random_image(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Image {
    Image::from_fn(n, n, 1.0, |_, _| rng.random_range(lo..hi))
}

/// `true` when every step of `trace` is non-increasing up to a relative slack.
pub fn non_increasing(trace: &[f64], rel: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + rel * (1.0 + w[0].abs()))
}

/// Minimizer of the majorized MAP cost with responsibilities frozen at `weights`,
/// by a dense linear solve: `(A^T D A + c sum w P^T R^-1 P) x = A^T D y + c sum w P^T R^-1 mu`.
pub fn frozen_surrogate_minimizer(
    a_dense: &DMatrix<f64>,
    d: &[f64],
    y: &[f64],
    model: &GmMrfModel,
    weights: &gmmrf_core::model::PatchWeights,
    width: usize,
) -> Vec<f64> {
    let n = a_dense.ncols();
    let mut h = a_dense.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)) * a_dense;
    let dy: Vec<f64> = d.iter().zip(y).map(|(w, v)| w * v).collect();
    let mut b = a_dense.transpose() * nalgebra::DVector::from_vec(dy);
    let g = model.geometry();
    let l = g.len();
    let c = model.energy_scale();
    for (row, col) in weights.centers().iter() {
        let pix: Vec<usize> = (0..l)
            .map(|q| (row + q / g.cols() - g.half_rows()) * width + col + q % g.cols() - g.half_cols())
            .collect();
        for (comp, &w) in model.scaled_mixture().components().iter().zip(weights.get(row, col)) {
            let prec = comp.precision();
            for p in 0..l {
                let mut pm = 0.0;
                for q in 0..l {
                    h[(pix[p], pix[q])] += c * w * prec[p * l + q];
                    pm += prec[p * l + q] * comp.mean()[q];
                }
                b[pix[p]] += c * w * pm;
            }
        }
    }
    assert_eq!(h.nrows(), n);
    h.cholesky().expect("SPD normal matrix").solve(&b).as_slice().to_vec()
}

/// Dense copy of a sparse system matrix.
pub fn dense_system(a: &gmmrf_core::projector::SparseSystemMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            m[(i, j as usize)] += v;
        }
    }
    m
}
