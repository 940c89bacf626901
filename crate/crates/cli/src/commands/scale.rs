use std::path::Path;

use anyhow::{Context, Result};
use gmmrf_core::model::{save_model, RegParams};
use serde::Serialize;

use super::open_model;
use crate::config::RegOverrides;
use crate::manifest::{manifest_path, Manifest};

#[derive(Serialize)]
struct ScaleJob<'a> {
    input: &'a Path,
    output: &'a Path,
    params: RegParams,
}

pub fn run(input: &Path, output: &Path, overrides: RegOverrides) -> Result<()> {
    let model = open_model(input, &RegOverrides::default())?;
    let params = overrides.apply(model.params());
    let scaled = model.with_params(params)?;
    save_model(&scaled, output).with_context(|| format!("writing model {}", output.display()))?;
    for (k, s) in scaled.component_scales().iter().enumerate() {
        println!("component {k}: scale {s}");
    }
    println!("wrote {} (sigma_x = {}, p = {}, alpha = {})", output.display(), params.sigma_x, params.p, params.alpha);
    let mut manifest = Manifest::new("scale-model", &ScaleJob { input, output, params })?;
    manifest.input(input).output(output);
    manifest.write(&manifest_path(output))
}
