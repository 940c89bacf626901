//! Job configuration files.
//!
//! Every job is a TOML document; unknown keys are rejected and relative paths
//! are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gmmrf_core::model::RegParams;
use gmmrf_core::optimizer::{StopCriteria, UpdateOrder};
use gmmrf_core::train::{EmConfig, GroupSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Parses a config file and resolves its paths.
pub fn load<T: DeserializeOwned + ResolvePaths>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: T = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.resolve(&base);
    Ok(cfg)
}

pub trait ResolvePaths {
    fn resolve(&mut self, base: &Path);
}

fn join(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn join_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        join(base, p);
    }
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Optional overrides of the regularization parameters.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegOverrides {
    pub sigma_x: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
}

impl RegOverrides {
    pub fn apply(&self, base: RegParams) -> RegParams {
        RegParams {
            sigma_x: self.sigma_x.unwrap_or(base.sigma_x),
            p: self.p.unwrap_or(base.p),
            alpha: self.alpha.unwrap_or(base.alpha),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_x.is_none() && self.p.is_none() && self.alpha.is_none()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSpec {
    pub outer_iters: usize,
    pub inner_sweeps: usize,
    pub rel_change_tol: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        let s = StopCriteria::default();
        Self { outer_iters: s.outer_iters, inner_sweeps: s.inner_sweeps, rel_change_tol: s.rel_change_tol }
    }
}

impl From<StopSpec> for StopCriteria {
    fn from(s: StopSpec) -> Self {
        StopCriteria { outer_iters: s.outer_iters, inner_sweeps: s.inner_sweeps, rel_change_tol: s.rel_change_tol }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderSpec {
    #[default]
    Raster,
    Shuffled,
    Colored,
}

impl OrderSpec {
    pub fn to_order(self, seed: u64) -> UpdateOrder {
        match self {
            OrderSpec::Raster => UpdateOrder::Raster,
            OrderSpec::Shuffled => UpdateOrder::Shuffled(seed),
            OrderSpec::Colored => UpdateOrder::Colored,
        }
    }
}

fn default_patch() -> [usize; 2] {
    [5, 5]
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub output: PathBuf,
    pub images: Vec<PathBuf>,
    /// Patch rows and columns, both odd.
    #[serde(default = "default_patch")]
    pub patch: [usize; 2],
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub em: EmConfig,
    /// Group table; the built-in CT tissue table when omitted.
    #[serde(default)]
    pub groups: Option<Vec<GroupSpec>>,
    #[serde(default)]
    pub params: RegOverrides,
}

impl ResolvePaths for TrainConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.output);
        for p in &mut self.images {
            join(base, p);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    SheppLogan,
    Tissue,
    Gepp,
    File,
}

fn default_size() -> usize {
    128
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    #[serde(default = "default_size")]
    pub size: usize,
    /// mm; ignored for `file`, which carries its own.
    #[serde(default = "unit")]
    pub pixel_size: f64,
    /// Image file for `kind = "file"`.
    pub path: Option<PathBuf>,
    /// Bright single-pixel specks added to the phantom.
    #[serde(default)]
    pub specks: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of additive white Gaussian noise, HU.
    pub sigma: f64,
    pub output: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub n_angles: usize,
    pub n_detectors: Option<usize>,
    /// mm; the pixel size when omitted.
    pub detector_spacing: Option<f64>,
    /// Incident photons per ray.
    pub photons: f64,
    #[serde(default)]
    pub noiseless: bool,
    pub output: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: u64,
    pub phantom: PhantomSpec,
    /// Where to write the noise-free phantom.
    pub truth: Option<PathBuf>,
    pub noise: Option<NoiseSpec>,
    pub scan: Option<ScanSpec>,
}

impl ResolvePaths for SimulateConfig {
    fn resolve(&mut self, base: &Path) {
        join_opt(base, &mut self.phantom.path);
        join_opt(base, &mut self.truth);
        if let Some(n) = &mut self.noise {
            join(base, &mut n.output);
        }
        if let Some(s) = &mut self.scan {
            join(base, &mut s.output);
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Mbir,
    Fbp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    #[default]
    Backprojection,
    Fbp,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Required for `method = "mbir"`.
    pub model: Option<PathBuf>,
    pub sinogram: PathBuf,
    pub output: PathBuf,
    /// Objective trace; `<output>.trace.txt` when omitted.
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub init: InitSpec,
    /// Clamp pixels at air (-1000 HU), i.e. non-negative attenuation.
    #[serde(default = "yes")]
    pub clamp: bool,
    #[serde(default)]
    pub order: OrderSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub report_entropy: bool,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub params: RegOverrides,
}

impl ResolvePaths for ReconstructConfig {
    fn resolve(&mut self, base: &Path) {
        join_opt(base, &mut self.model);
        join(base, &mut self.sinogram);
        join(base, &mut self.output);
        join_opt(base, &mut self.trace);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    pub model: PathBuf,
    pub input: PathBuf,
    pub output: PathBuf,
    pub trace: Option<PathBuf>,
    /// Noise standard deviation of the input, HU.
    pub noise_sigma: f64,
    #[serde(default)]
    pub clamp: bool,
    #[serde(default)]
    pub order: OrderSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub report_entropy: bool,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub params: RegOverrides,
}

impl ResolvePaths for DenoiseConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.model);
        join(base, &mut self.input);
        join(base, &mut self.output);
        join_opt(base, &mut self.trace);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSpec {
    pub name: String,
    pub row: f64,
    pub col: f64,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub image: PathBuf,
    pub reference: Option<PathBuf>,
    pub report: PathBuf,
    #[serde(default)]
    pub roi: Vec<RoiSpec>,
    pub wire: Option<WireSpec>,
}

impl ResolvePaths for EvalConfig {
    fn resolve(&mut self, base: &Path) {
        join(base, &mut self.image);
        join_opt(base, &mut self.reference);
        join(base, &mut self.report);
    }
}

pub fn groups_or_default(cfg: &TrainConfig) -> Vec<GroupSpec> {
    cfg.groups.clone().unwrap_or_else(gmmrf_core::train::ct_tissue_groups)
}
