//! Binary model container.
//!
//! Little-endian layout:
//!
//! | field            | type            |
//! |------------------|-----------------|
//! | magic            | `b"GMMRFMDL"`   |
//! | format version   | u32 (= 1)       |
//! | ndim             | u32 (= 2)       |
//! | dims             | ndim x u32      |
//! | K                | u32             |
//! | sigma_x, p, alpha| 3 x f64         |
//! | per component    | weight f64, mean L x f64, covariance L*L x f64 row-major |
//!
//! Covariances are the trained (unscaled) ones; the scaled mixture is rebuilt on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::geometry::PatchGeometry;
use super::gmmrf::{GmMrfModel, RegParams};
use super::mixture::{GaussianComponent, GaussianMixture};
use crate::binio::{read_f64, read_u32, write_f64, write_u32};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"GMMRFMDL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &GmMrfModel, mut w: W) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    write_u32(&mut w, MODEL_FORMAT_VERSION)?;
    let dims = model.geometry().dims();
    write_u32(&mut w, dims.len() as u32)?;
    for d in dims {
        write_u32(&mut w, d as u32)?;
    }
    let mix = model.mixture();
    write_u32(&mut w, mix.n_components() as u32)?;
    let p = model.params();
    for v in [p.sigma_x, p.p, p.alpha] {
        write_f64(&mut w, v)?;
    }
    for c in mix.components() {
        write_f64(&mut w, c.weight())?;
        for &m in c.mean() {
            write_f64(&mut w, m)?;
        }
        let cov = c.covariance();
        for i in 0..cov.nrows() {
            for j in 0..cov.ncols() {
                write_f64(&mut w, cov[(i, j)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<GmMrfModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a GM-MRF model file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported model format version {version}")));
    }
    let ndim = read_u32(&mut r)?;
    if ndim != 2 {
        return Err(Error::Format(format!("only 2-D patch geometries are supported, file has {ndim}")));
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let geometry = PatchGeometry::new(rows, cols)?;
    let k = read_u32(&mut r)? as usize;
    if k == 0 || k > 1 << 20 {
        return Err(Error::Format(format!("implausible component count {k}")));
    }
    let params = RegParams { sigma_x: read_f64(&mut r)?, p: read_f64(&mut r)?, alpha: read_f64(&mut r)? };
    let l = geometry.len();
    let mut comps = Vec::with_capacity(k);
    for _ in 0..k {
        let weight = read_f64(&mut r)?;
        let mean = (0..l).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let cov = (0..l * l).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        comps.push(GaussianComponent::new(weight, mean, DMatrix::from_row_slice(l, l, &cov))?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after model payload".into()));
    }
    GmMrfModel::new(geometry, GaussianMixture::new(comps)?, params)
}

pub fn save_model(model: &GmMrfModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GmMrfModel> {
    read_model(BufReader::new(File::open(path)?))
}
