use std::path::Path;

use anyhow::{bail, Context, Result};
use gmmrf_core::imageio::{load_image, save_image};
use gmmrf_core::phantom::{add_specks, gepp_analog, shepp_logan, tissue_phantom};
use gmmrf_core::projector::{save_sinogram, simulate_sinogram, Dose, ScanGeometry, SparseSystemMatrix};
use gmmrf_core::Image;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use toml::{Table, Value};

use crate::config::{self, require_file, PhantomKind, SimulateConfig};
use crate::manifest::{manifest_path, Manifest};

pub fn run(config_path: &Path) -> Result<()> {
    let cfg: SimulateConfig = config::load(config_path)?;
    let Some(primary) = cfg
        .scan
        .as_ref()
        .map(|s| s.output.clone())
        .or_else(|| cfg.noise.as_ref().map(|n| n.output.clone()))
        .or_else(|| cfg.truth.clone())
    else {
        bail!("simulate needs at least one of `truth`, `[noise]` or `[scan]`");
    };
    let mut manifest = Manifest::new("simulate", &cfg)?;
    manifest.seed(cfg.seed);

    let ph = &cfg.phantom;
    let truth = match ph.kind {
        PhantomKind::SheppLogan => shepp_logan(ph.size)?.with_pixel_size(ph.pixel_size),
        PhantomKind::Tissue => tissue_phantom(ph.size, cfg.seed).with_pixel_size(ph.pixel_size),
        PhantomKind::Gepp => {
            let (img, layout) = gepp_analog(ph.size, ph.pixel_size)?;
            let mut t = Table::new();
            t.insert("wire_row".into(), Value::Integer(layout.wire.0 as i64));
            t.insert("wire_col".into(), Value::Integer(layout.wire.1 as i64));
            t.insert("noise_roi_row".into(), Value::Float(layout.noise_roi.row));
            t.insert("noise_roi_col".into(), Value::Float(layout.noise_roi.col));
            t.insert("noise_roi_radius".into(), Value::Float(layout.noise_roi.radius));
            println!(
                "wire at ({}, {}); noise ROI centre ({}, {}) radius {}",
                layout.wire.0, layout.wire.1, layout.noise_roi.row, layout.noise_roi.col, layout.noise_roi.radius
            );
            manifest.extra("layout", t);
            img
        }
        PhantomKind::File => {
            let Some(path) = &ph.path else { bail!("phantom kind `file` needs `path`") };
            require_file(path, "phantom image")?;
            manifest.input(path);
            load_image(path).with_context(|| format!("loading {}", path.display()))?
        }
    };
    let truth = if ph.specks > 0 { add_specks(&truth, ph.specks, cfg.seed.wrapping_add(1)) } else { truth };

    if let Some(path) = &cfg.truth {
        save_image(&truth, path)?;
        manifest.output(path);
    }
    if let Some(noise) = &cfg.noise {
        if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
            bail!("noise sigma must be non-negative, got {}", noise.sigma);
        }
        let noisy = add_gaussian_noise(&truth, noise.sigma, cfg.seed);
        save_image(&noisy, &noise.output)?;
        manifest.output(&noise.output);
    }
    if let Some(scan) = &cfg.scan {
        if truth.width() != truth.height() {
            bail!("scans need a square image, got {}x{}", truth.height(), truth.width());
        }
        let mut geom = ScanGeometry::for_image(truth.width(), truth.pixel_size(), scan.n_angles);
        if let Some(nd) = scan.n_detectors {
            geom.n_detectors = nd;
        }
        if let Some(sp) = scan.detector_spacing {
            geom.detector_spacing = sp;
        }
        let a = SparseSystemMatrix::build(&geom)?;
        let dose = if scan.noiseless { Dose::Noiseless(scan.photons) } else { Dose::Photons(scan.photons) };
        let (y, d) = simulate_sinogram(&a, &truth, dose, cfg.seed)?;
        save_sinogram(&y, &d, &scan.output)?;
        println!("{} views x {} bins, {} nonzeros in A", geom.n_angles, geom.n_detectors, a.nnz());
        manifest.output(&scan.output);
    }
    manifest.write(&manifest_path(&primary))
}

fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Image {
    if sigma == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    img.map(|v| v + normal.sample(&mut rng))
}
