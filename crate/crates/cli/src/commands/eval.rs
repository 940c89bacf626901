use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use gmmrf_core::imageio::load_image;
use gmmrf_core::metrics::{mtf10, mtf_from_wire, rmse, roi_stats, Roi};

use crate::config::{self, require_file, EvalConfig};
use crate::manifest::{manifest_path, Manifest};

pub fn run(config_path: &Path) -> Result<()> {
    let cfg: EvalConfig = config::load(config_path)?;
    require_file(&cfg.image, "image")?;
    let img = load_image(&cfg.image).with_context(|| format!("loading {}", cfg.image.display()))?;
    let reference = match &cfg.reference {
        Some(p) => {
            require_file(p, "reference image")?;
            Some(load_image(p).with_context(|| format!("loading {}", p.display()))?)
        }
        None => None,
    };

    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k}: {v}").expect("writing to a String");
    line("image", cfg.image.display().to_string());
    line("width", img.width().to_string());
    line("height", img.height().to_string());
    line("pixel_size_mm", img.pixel_size().to_string());
    line("mean", img.mean().to_string());
    if let Some(r) = &reference {
        line("rmse", rmse(&img, r, None)?.to_string());
    }
    for spec in &cfg.roi {
        let roi = Roi::new(spec.row, spec.col, spec.radius);
        let (mean, std) = roi_stats(&img, &roi)?;
        line(&format!("roi.{}.mean", spec.name), mean.to_string());
        line(&format!("roi.{}.std", spec.name), std.to_string());
        if let Some(r) = &reference {
            line(&format!("roi.{}.rmse", spec.name), rmse(&img, r, Some(&roi))?.to_string());
        }
    }
    if let Some(w) = cfg.wire {
        let curve = mtf_from_wire(&img, (w.row, w.col), img.pixel_size())?;
        line("mtf10_cycles_per_mm", mtf10(&curve).to_string());
        for (i, (f, m)) in curve.frequencies.iter().zip(&curve.modulation).enumerate() {
            line(&format!("mtf.{i}"), format!("{f} {m}"));
        }
    }
    print!("{out}");
    std::fs::write(&cfg.report, &out).with_context(|| format!("writing report {}", cfg.report.display()))?;

    let mut manifest = Manifest::new("eval", &cfg)?;
    manifest.input(&cfg.image);
    if let Some(p) = &cfg.reference {
        manifest.input(p);
    }
    manifest.output(&cfg.report);
    manifest.write(&manifest_path(&cfg.report))
}
