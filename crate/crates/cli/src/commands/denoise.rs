use std::path::Path;

use anyhow::{Context, Result};
use gmmrf_core::imageio::{load_image, save_image};
use gmmrf_core::optimizer::{map_reconstruct, MapProblem};

use super::{open_model, solver_options, summarize_map, write_trace};
use crate::config::{self, require_file, DenoiseConfig};
use crate::manifest::{manifest_path, Manifest};

pub fn run(config_path: &Path) -> Result<()> {
    let cfg: DenoiseConfig = config::load(config_path)?;
    require_file(&cfg.input, "input image")?;
    let model = open_model(&cfg.model, &cfg.params)?;
    let noisy = load_image(&cfg.input).with_context(|| format!("loading {}", cfg.input.display()))?;
    let problem = MapProblem::denoising(&noisy, cfg.noise_sigma, &model)?;
    let opts = solver_options(cfg.order, cfg.seed, cfg.clamp, cfg.report_entropy);
    let result = map_reconstruct(&problem, noisy, &cfg.stop.into(), &opts)?;
    save_image(&result.image, &cfg.output)?;
    let trace = cfg.trace.clone().unwrap_or_else(|| config::sibling(&cfg.output, ".trace.txt"));
    write_trace(&trace, &result.objective)?;

    let mut manifest = Manifest::new("denoise", &cfg)?;
    manifest.seed(cfg.seed).input(&cfg.model).input(&cfg.input).output(&cfg.output).output(&trace).trace(&trace);
    if cfg.report_entropy {
        let path = config::sibling(&cfg.output, ".entropy.txt");
        write_trace(&path, &result.max_entropy)?;
        manifest.output(&path);
    }
    summarize_map(&result, &mut manifest);
    println!("wrote {}", cfg.output.display());
    manifest.write(&manifest_path(&cfg.output))
}
