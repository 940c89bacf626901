//! Image-quality metrics: RMSE, ROI statistics and wire MTF.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;

/// Disc of pixels whose centres lie within `radius` of `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Roi {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
}

impl Roi {
    pub fn new(row: f64, col: f64, radius: f64) -> Self {
        Self { row, col, radius }
    }

    pub fn check_inside(&self, img: &Image) -> Result<()> {
        let ok = self.radius >= 0.0
            && self.row - self.radius >= 0.0
            && self.col - self.radius >= 0.0
            && self.row + self.radius <= (img.height() - 1) as f64
            && self.col + self.radius <= (img.width() - 1) as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("ROI {self:?} is not fully inside the {}x{} image", img.height(), img.width())))
        }
    }

    /// Flat indices of member pixels, row-major.
    pub fn pixels(&self, img: &Image) -> Result<Vec<usize>> {
        self.check_inside(img)?;
        let r2 = self.radius * self.radius;
        let (r_lo, r_hi) = ((self.row - self.radius).floor() as usize, (self.row + self.radius).ceil() as usize);
        let (c_lo, c_hi) = ((self.col - self.radius).floor() as usize, (self.col + self.radius).ceil() as usize);
        let mut out = Vec::new();
        for r in r_lo..=r_hi.min(img.height() - 1) {
            for c in c_lo..=c_hi.min(img.width() - 1) {
                let (dr, dc) = (r as f64 - self.row, c as f64 - self.col);
                if dr * dr + dc * dc <= r2 {
                    out.push(img.index(r, c));
                }
            }
        }
        Ok(out)
    }
}

/// Root-mean-square difference over the ROI, or the whole image.
pub fn rmse(a: &Image, b: &Image, roi: Option<&Roi>) -> Result<f64> {
    a.check_same_shape(b)?;
    let sq = |i: usize| (a.data()[i] - b.data()[i]).powi(2);
    let (sum, n) = match roi {
        Some(roi) => {
            let px = roi.pixels(a)?;
            (px.iter().map(|&i| sq(i)).sum::<f64>(), px.len())
        }
        None => ((0..a.len()).map(sq).sum::<f64>(), a.len()),
    };
    if n == 0 {
        return Err(Error::invalid("ROI contains no pixels"));
    }
    Ok((sum / n as f64).sqrt())
}

/// Mean and population standard deviation within the ROI.
pub fn roi_stats(img: &Image, roi: &Roi) -> Result<(f64, f64)> {
    let px = roi.pixels(img)?;
    if px.is_empty() {
        return Err(Error::invalid("ROI contains no pixels"));
    }
    let n = px.len() as f64;
    let mean = px.iter().map(|&i| img.data()[i]).sum::<f64>() / n;
    let var = px.iter().map(|&i| (img.data()[i] - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Side length of the square window used for wire MTF estimation.
pub const MTF_WINDOW: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct MtfCurve {
    /// Cycles per mm, ascending from 0 to Nyquist.
    pub frequencies: Vec<f64>,
    /// Radially averaged modulation, 1 at zero frequency.
    pub modulation: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// MTF from an isolated wire.
///
/// Takes the 32 x 32 window with the wire at offset (16, 16), subtracts the
/// median of the window border, and radially averages the 2-D DFT magnitude
/// in unit-width frequency bins up to Nyquist, normalized by the DC value.
pub fn mtf_from_wire(img: &Image, wire: (usize, usize), pixel_size: f64) -> Result<MtfCurve> {
    if !(pixel_size > 0.0) {
        return Err(Error::invalid("pixel size must be positive"));
    }
    let n = MTF_WINDOW;
    let half = n / 2;
    let (wr, wc) = wire;
    if wr < half || wc < half || wr + half > img.height() || wc + half > img.width() {
        return Err(Error::invalid("MTF window around the wire leaves the image"));
    }
    let (r0, c0) = (wr - half, wc - half);
    let mut win: Vec<f64> = (0..n * n).map(|i| img.get(r0 + i / n, c0 + i % n)).collect();
    let peak = win[half * n + half];
    if win.iter().any(|&v| v > peak) {
        return Err(Error::invalid("wire pixel is not the maximum of its MTF window"));
    }
    let border: Vec<f64> = (0..n * n)
        .filter(|i| {
            let (r, c) = (i / n, i % n);
            r == 0 || c == 0 || r == n - 1 || c == n - 1
        })
        .map(|i| win[i])
        .collect();
    let bg = median(border);
    for v in &mut win {
        *v -= bg;
    }

    let mut buf: Vec<Complex<f64>> = win.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }

    let nbins = half + 1;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    let signed = |k: usize| if k < half { k as f64 } else { k as f64 - n as f64 };
    for r in 0..n {
        for c in 0..n {
            let rho = signed(r).hypot(signed(c));
            let bin = rho.round() as usize;
            if bin < nbins {
                sum[bin] += buf[r * n + c].norm();
                count[bin] += 1;
            }
        }
    }
    let dc = sum[0];
    if !(dc > 0.0) {
        return Err(Error::Numerical("wire has no positive integrated signal above background".into()));
    }
    let modulation = (0..nbins).map(|b| sum[b] / count[b] as f64 / dc).collect();
    let frequencies = (0..nbins).map(|b| b as f64 / (n as f64 * pixel_size)).collect();
    Ok(MtfCurve { frequencies, modulation })
}

/// First frequency where the modulation drops below 0.1, linearly
/// interpolated; the last (Nyquist) frequency if it never does.
pub fn mtf10(curve: &MtfCurve) -> f64 {
    const LEVEL: f64 = 0.1;
    let m = &curve.modulation;
    let f = &curve.frequencies;
    for i in 1..m.len() {
        if m[i] < LEVEL {
            let t = (m[i - 1] - LEVEL) / (m[i - 1] - m[i]);
            return f[i - 1] + t * (f[i] - f[i - 1]);
        }
    }
    *f.last().expect("non-empty curve")
}
