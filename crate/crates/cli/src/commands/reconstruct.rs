use std::path::Path;

use anyhow::{bail, Context, Result};
use gmmrf_core::imageio::save_image;
use gmmrf_core::optimizer::{map_reconstruct, MapProblem};
use gmmrf_core::projector::{fbp, load_sinogram, SparseSystemMatrix};

use super::{open_model, solver_options, summarize_map, write_trace};
use crate::config::{self, require_file, InitSpec, Method, ReconstructConfig};
use crate::manifest::{manifest_path, Manifest};

pub fn run(config_path: &Path) -> Result<()> {
    let cfg: ReconstructConfig = config::load(config_path)?;
    require_file(&cfg.sinogram, "sinogram")?;
    let (y, d) = load_sinogram(&cfg.sinogram).with_context(|| format!("loading {}", cfg.sinogram.display()))?;
    let mut manifest = Manifest::new("reconstruct", &cfg)?;
    manifest.input(&cfg.sinogram);

    match cfg.method {
        Method::Fbp => {
            save_image(&fbp(&y)?, &cfg.output)?;
            println!("wrote {}", cfg.output.display());
        }
        Method::Mbir => {
            let Some(model_path) = &cfg.model else { bail!("method `mbir` needs `model`") };
            let model = open_model(model_path, &cfg.params)?;
            manifest.input(model_path).seed(cfg.seed);
            let a = SparseSystemMatrix::build(y.geometry())?;
            let problem = MapProblem::tomography(&a, &y, &d, &model)?;
            let init = match cfg.init {
                InitSpec::Backprojection => problem.default_init()?,
                InitSpec::Fbp => problem.fbp_init()?,
            };
            let opts = solver_options(cfg.order, cfg.seed, cfg.clamp, cfg.report_entropy);
            let result = map_reconstruct(&problem, init, &cfg.stop.into(), &opts)?;
            save_image(&result.image, &cfg.output)?;
            let trace = cfg.trace.clone().unwrap_or_else(|| config::sibling(&cfg.output, ".trace.txt"));
            write_trace(&trace, &result.objective)?;
            manifest.trace(&trace).output(&trace);
            if cfg.report_entropy {
                let path = config::sibling(&cfg.output, ".entropy.txt");
                write_trace(&path, &result.max_entropy)?;
                manifest.output(&path);
            }
            summarize_map(&result, &mut manifest);
            println!("wrote {}", cfg.output.display());
        }
    }
    manifest.output(&cfg.output);
    manifest.write(&manifest_path(&cfg.output))
}
