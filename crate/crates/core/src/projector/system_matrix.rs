//! Exact ray/pixel intersection lengths, stored for both row and column access.
//!
//! Each ray is clipped to the image square, every crossing with a vertical or
//! horizontal grid line inside the clip is collected, and the segment between
//! consecutive crossings is charged to the pixel containing its midpoint.

use rayon::prelude::*;

use super::geometry::ScanGeometry;
use super::sinogram::Sinogram;
use crate::error::{Error, Result};
use crate::image::Image;

/// Sparse `M x N` projection matrix with CSR and CSC copies.
#[derive(Clone, Debug)]
pub struct SparseSystemMatrix {
    geometry: ScanGeometry,
    row_ptr: Vec<usize>,
    row_cols: Vec<u32>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
    col_vals: Vec<f64>,
}

/// Intersection lengths of one ray with the pixel grid, as `(pixel, length)`.
pub fn trace_ray(geom: &ScanGeometry, theta: f64, offset: f64) -> Vec<(u32, f64)> {
    let n = geom.n_pixels;
    let ps = geom.pixel_size;
    let h = geom.half_extent();
    let (s, c) = theta.sin_cos();
    // p(t) = offset * (c, s) + t * (-s, c)
    let (x0, y0) = (offset * c, offset * s);
    let (dx, dy) = (-s, c);
    let eps = 1e-12;

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (p0, d) in [(x0, dx), (y0, dy)] {
        if d.abs() < eps {
            if p0 <= -h || p0 >= h {
                return Vec::new();
            }
        } else {
            let (a, b) = ((-h - p0) / d, (h - p0) / d);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if t_hi - t_lo <= eps * ps {
        return Vec::new();
    }

    let mut ts = Vec::with_capacity(2 * n + 2);
    ts.push(t_lo);
    ts.push(t_hi);
    for (p0, d) in [(x0, dx), (y0, dy)] {
        if d.abs() < eps {
            continue;
        }
        for k in 0..=n {
            let t = (-h + k as f64 * ps - p0) / d;
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let mut out = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= eps * ps {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (xm, ym) = (x0 + tm * dx, y0 + tm * dy);
        let col = ((xm + h) / ps).floor();
        let row = ((h - ym) / ps).floor();
        if col < 0.0 || row < 0.0 || col >= n as f64 || row >= n as f64 {
            continue;
        }
        out.push(((row as usize * n + col as usize) as u32, len));
    }
    out.sort_by_key(|e| e.0);
    // merge duplicate pixels produced by coincident crossings
    out.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    out
}

impl SparseSystemMatrix {
    pub fn build(geometry: &ScanGeometry) -> Result<Self> {
        geometry.validate()?;
        let m = geometry.n_rays();
        let n = geometry.n_unknowns();
        let rows: Vec<Vec<(u32, f64)>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let (view, bin) = (i / geometry.n_detectors, i % geometry.n_detectors);
                trace_ray(geometry, geometry.angle(view), geometry.detector_offset(bin))
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut row_cols = Vec::with_capacity(nnz);
        let mut row_vals = Vec::with_capacity(nnz);
        let mut col_count = vec![0usize; n];
        for r in &rows {
            for &(j, v) in r {
                row_cols.push(j);
                row_vals.push(v);
                col_count[j as usize] += 1;
            }
            row_ptr.push(row_cols.len());
        }

        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + col_count[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_rows = vec![0u32; nnz];
        let mut col_vals = vec![0.0; nnz];
        for (i, r) in rows.iter().enumerate() {
            for &(j, v) in r {
                let slot = &mut fill[j as usize];
                col_rows[*slot] = i as u32;
                col_vals[*slot] = v;
                *slot += 1;
            }
        }
        Ok(Self { geometry: *geometry, row_ptr, row_cols, row_vals, col_ptr, col_rows, col_vals })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Row `i` as `(pixel indices, lengths)`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.row_cols[r.clone()], &self.row_vals[r])
    }

    /// Column `j` as `(ray indices, lengths)`.
    pub fn column(&self, j: usize) -> Result<(&[u32], &[f64])> {
        if j >= self.n_cols() {
            return Err(Error::invalid(format!("pixel index {j} out of range 0..{}", self.n_cols())));
        }
        Ok(self.column_unchecked(j))
    }

    #[inline]
    pub(crate) fn column_unchecked(&self, j: usize) -> (&[u32], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.col_rows[r.clone()], &self.col_vals[r])
    }

    /// `A x` on raw vectors.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols() {
            return Err(Error::dims("image length", self.n_cols(), x.len()));
        }
        Ok((0..self.n_rows())
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j as usize]).sum()
            })
            .collect())
    }

    /// `A^T r` on raw vectors, accumulated column by column.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.n_rows() {
            return Err(Error::dims("sinogram length", self.n_rows(), r.len()));
        }
        Ok((0..self.n_cols())
            .into_par_iter()
            .map(|j| {
                let (rows, vals) = self.column_unchecked(j);
                rows.iter().zip(vals).map(|(&i, v)| v * r[i as usize]).sum()
            })
            .collect())
    }

    pub fn forward_project(&self, x: &Image) -> Result<Sinogram> {
        self.check_image(x)?;
        Ok(Sinogram::new(self.geometry, self.apply(x.data())?).expect("sized from geometry"))
    }

    pub fn back_project(&self, r: &Sinogram) -> Result<Image> {
        if r.geometry() != &self.geometry {
            return Err(Error::invalid("sinogram geometry differs from the system matrix geometry"));
        }
        let n = self.geometry.n_pixels;
        Image::new(n, n, self.geometry.pixel_size, self.apply_transpose(r.values())?)
    }

    /// `A^T D A` diagonal entry for pixel `j`.
    pub fn column_weighted_norm(&self, j: usize, weights: &[f64]) -> f64 {
        let (rows, vals) = self.column_unchecked(j);
        rows.iter().zip(vals).map(|(&i, v)| v * v * weights[i as usize]).sum()
    }

    fn check_image(&self, x: &Image) -> Result<()> {
        let n = self.geometry.n_pixels;
        if x.width() != n || x.height() != n {
            return Err(Error::invalid(format!(
                "image is {}x{}, projector expects {n}x{n}",
                x.height(),
                x.width()
            )));
        }
        Ok(())
    }
}
