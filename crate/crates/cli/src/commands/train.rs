use std::path::Path;

use anyhow::{Context, Result};
use gmmrf_core::imageio::load_image;
use gmmrf_core::model::{save_model, PatchGeometry};
use gmmrf_core::train::train_gmmrf;

use super::write_trace;
use crate::config::{self, groups_or_default, require_file, TrainConfig};
use crate::manifest::{manifest_path, Manifest};

pub fn run(config_path: &Path) -> Result<()> {
    let cfg: TrainConfig = config::load(config_path)?;
    for p in &cfg.images {
        require_file(p, "training image")?;
    }
    let geometry = PatchGeometry::new(cfg.patch[0], cfg.patch[1])?;
    let specs = groups_or_default(&cfg);
    let images = cfg
        .images
        .iter()
        .map(|p| load_image(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;

    let trained = train_gmmrf(&images, geometry, &specs, cfg.stride, &cfg.em)?;
    let model = trained.model.with_params(cfg.params.apply(trained.model.params()))?;
    save_model(&model, &cfg.output).with_context(|| format!("writing model {}", cfg.output.display()))?;

    let mut manifest = Manifest::new("train", &cfg)?;
    manifest.seed(cfg.em.seed).output(&cfg.output);
    for p in &cfg.images {
        manifest.input(p);
    }
    for g in &trained.groups {
        let fit = &g.fit;
        println!(
            "group {}: {} patches, K = {}, {} EM iterations, converged: {}, rescues: {:?}",
            g.index,
            g.n_patches,
            fit.mixture.n_components(),
            fit.objective_trace.len() - 1,
            fit.converged,
            fit.rescues
        );
        for (t, ll) in fit.objective_trace.iter().enumerate() {
            println!("group {} iter {t}: {ll}", g.index);
        }
        let trace = config::sibling(&cfg.output, &format!(".group{}.trace.txt", g.index));
        write_trace(&trace, &fit.objective_trace)?;
        manifest.trace(&trace).output(&trace);
    }
    println!("wrote {} ({} components)", cfg.output.display(), model.mixture().n_components());
    manifest.extra("components", model.mixture().n_components() as i64);
    manifest.write(&manifest_path(&cfg.output))
}
