//! Ram-Lak filtered back-projection, used only as a comparison baseline.

use rayon::prelude::*;

use super::sinogram::Sinogram;
use crate::error::Result;
use crate::image::Image;

/// Spatial-domain Ram-Lak kernel for bin spacing `tau`, indices `-half..=half`.
fn ramp_kernel(half: usize, tau: f64) -> Vec<f64> {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    (0..=2 * half)
        .map(|i| {
            let n = i as i64 - half as i64;
            if n == 0 {
                1.0 / (4.0 * tau * tau)
            } else if n % 2 == 0 {
                0.0
            } else {
                -1.0 / (pi2 * (n * n) as f64 * tau * tau)
            }
        })
        .collect()
}

/// Filtered back-projection with linear detector interpolation.
pub fn fbp(y: &Sinogram) -> Result<Image> {
    let g = *y.geometry();
    let nd = g.n_detectors;
    let tau = g.detector_spacing;
    let kernel = ramp_kernel(nd, tau);
    let filtered: Vec<Vec<f64>> = y
        .values()
        .par_chunks(nd)
        .map(|view| {
            (0..nd)
                .map(|d| {
                    let mut acc = 0.0;
                    for (k, &v) in view.iter().enumerate() {
                        acc += v * kernel[(d + nd) - k];
                    }
                    acc * tau
                })
                .collect()
        })
        .collect();

    let n = g.n_pixels;
    let trig: Vec<(f64, f64)> = (0..g.n_angles).map(|a| g.angle(a).sin_cos()).collect();
    let center = (nd as f64 - 1.0) / 2.0;
    let scale = std::f64::consts::PI / g.n_angles as f64;
    let data: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (x, yv) = g.pixel_center(idx / n, idx % n);
            let mut acc = 0.0;
            for (q, &(s, c)) in filtered.iter().zip(&trig) {
                let u = (x * c + yv * s) / tau + center;
                let i0 = u.floor();
                let f = u - i0;
                let i0 = i0 as isize;
                let at = |i: isize| if i >= 0 && (i as usize) < nd { q[i as usize] } else { 0.0 };
                acc += (1.0 - f) * at(i0) + f * at(i0 + 1);
            }
            acc * scale
        })
        .collect();
    Image::new(n, n, g.pixel_size, data)
}
