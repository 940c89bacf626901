//! Measurements, statistical weights, and transmission-noise simulation.
//!
//! Sinogram values are line integrals of the HU image in HU·mm, i.e. `y = A x`
//! in the noiseless case. Attenuation is `mu = MU_WATER (1 + HU / 1000)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::geometry::ScanGeometry;
use super::system_matrix::SparseSystemMatrix;
use crate::binio::{read_f64, read_u32, write_f64, write_u32};
use crate::error::{Error, Result};
use crate::image::{Image, HU_AIR};

/// Linear attenuation of water, 1/mm.
pub const MU_WATER: f64 = 0.02;

/// Stacked measurements, view-major: `values[view * n_detectors + bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    geometry: ScanGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.n_rays() {
            return Err(Error::dims("sinogram length", geometry.n_rays(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram values must be finite"));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Diagonal data weights `D`, inverse measurement variance in (HU·mm)^-2.
#[derive(Clone, Debug, PartialEq)]
pub struct StatWeights(Vec<f64>);

impl StatWeights {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::invalid("statistical weights must be finite and non-negative"));
        }
        Ok(Self(diag))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Photon statistics for a simulated scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dose {
    /// Poisson counts with this many incident photons per ray.
    Photons(f64),
    /// Noise-free data at the given incident photon count (used for the weights only).
    Noiseless(f64),
}

impl Dose {
    fn i0(&self) -> f64 {
        match *self {
            Dose::Photons(i) | Dose::Noiseless(i) => i,
        }
    }
}

/// Weight conversion from photon counts to HU·mm units: `(MU_WATER / 1000)^2`.
pub fn counts_to_weight() -> f64 {
    (MU_WATER / 1000.0) * (MU_WATER / 1000.0)
}

/// Simulates a transmission scan of `x_true` (HU).
///
/// Ray `i` draws `lambda_i ~ Poisson(I0 exp(-l_i))` from a generator keyed by
/// `(seed, i)`. It returns `y_i = -log(max(lambda_i, 1) / I0)` converted to
/// HU·mm and `D_ii = lambda_i (MU_WATER/1000)^2`, which is proportional to the
/// counts and equal to the inverse variance of `y_i` to first order.
pub fn simulate_sinogram(
    a: &SparseSystemMatrix,
    x_true: &Image,
    dose: Dose,
    seed: u64,
) -> Result<(Sinogram, StatWeights)> {
    let i0 = dose.i0();
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::invalid(format!("incident photon count must be positive, got {i0}")));
    }
    let hu_line = a.forward_project(x_true)?;
    let ones = a.apply(&vec![-HU_AIR; a.n_cols()])?;
    let scale = MU_WATER / 1000.0;
    let (y, d): (Vec<f64>, Vec<f64>) = hu_line
        .values()
        .par_iter()
        .zip(ones.par_iter())
        .enumerate()
        .map(|(i, (&hx, &air))| {
            let atten = scale * (hx + air);
            let expected = i0 * (-atten).exp();
            match dose {
                Dose::Noiseless(_) => (hx, expected * scale * scale),
                Dose::Photons(_) => {
                    let counts = if expected > 0.0 {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(i as u64);
                        Poisson::new(expected).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    let l = -(counts.max(1.0) / i0).ln();
                    (l / scale - air, counts * scale * scale)
                }
            }
        })
        .unzip();
    Ok((Sinogram::new(*a.geometry(), y)?, StatWeights::new(d)?))
}

pub const SINOGRAM_MAGIC: &[u8; 8] = b"GMSINO01";
pub const SINOGRAM_FORMAT_VERSION: u32 = 1;

/// Little-endian: magic `b"GMSINO01"`, u32 version, u32 n_pixels, f64 pixel_size,
/// u32 n_angles, u32 n_detectors, f64 detector_spacing, then M f64 values and
/// M f64 weights.
pub fn write_sinogram<W: Write>(y: &Sinogram, d: &StatWeights, mut w: W) -> Result<()> {
    if d.len() != y.len() {
        return Err(Error::dims("weight count", y.len(), d.len()));
    }
    let g = y.geometry();
    w.write_all(SINOGRAM_MAGIC)?;
    write_u32(&mut w, SINOGRAM_FORMAT_VERSION)?;
    write_u32(&mut w, g.n_pixels as u32)?;
    write_f64(&mut w, g.pixel_size)?;
    write_u32(&mut w, g.n_angles as u32)?;
    write_u32(&mut w, g.n_detectors as u32)?;
    write_f64(&mut w, g.detector_spacing)?;
    for &v in y.values() {
        write_f64(&mut w, v)?;
    }
    for &v in d.as_slice() {
        write_f64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sinogram<R: Read>(mut r: R) -> Result<(Sinogram, StatWeights)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SINOGRAM_MAGIC {
        return Err(Error::Format("not a sinogram file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SINOGRAM_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported sinogram format version {version}")));
    }
    let geometry = ScanGeometry {
        n_pixels: read_u32(&mut r)? as usize,
        pixel_size: read_f64(&mut r)?,
        n_angles: read_u32(&mut r)? as usize,
        n_detectors: read_u32(&mut r)? as usize,
        detector_spacing: read_f64(&mut r)?,
    };
    geometry.validate().map_err(|e| Error::Format(e.to_string()))?;
    let m = geometry.n_rays();
    if m > 1 << 28 {
        return Err(Error::Format(format!("implausible sinogram size {m}")));
    }
    let values = (0..m).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let weights = (0..m).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after sinogram payload".into()));
    }
    Ok((Sinogram::new(geometry, values)?, StatWeights::new(weights)?))
}

pub fn save_sinogram(y: &Sinogram, d: &StatWeights, path: impl AsRef<Path>) -> Result<()> {
    write_sinogram(y, d, BufWriter::new(File::create(path)?))
}

pub fn load_sinogram(path: impl AsRef<Path>) -> Result<(Sinogram, StatWeights)> {
    read_sinogram(BufReader::new(File::open(path)?))
}
