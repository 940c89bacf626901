//! Patch-model training: extract, group, fit one mixture per group, merge.

pub mod em;
pub mod groups;
pub mod patches;

use rayon::prelude::*;

pub use em::{em_fit, EmConfig, EmFit};
pub use groups::{assign_group, ct_tissue_groups, partition_patches, patch_stats, validate_specs, GroupSpec};
pub use patches::{extract_patches, PatchDataset};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{merge_mixtures, GmMrfModel, PatchGeometry, RegParams};

/// Per-group outcome of a training run.
#[derive(Clone, Debug)]
pub struct GroupReport {
    pub index: u32,
    pub n_patches: usize,
    pub fit: EmFit,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: GmMrfModel,
    pub groups: Vec<GroupReport>,
}

/// Extracts patches from every image, partitions them, runs EM per group and
/// merges the group mixtures. The result carries `sigma_x = 1`, `p = 0` and
/// the default `alpha`.
pub fn train_gmmrf(
    images: &[Image],
    geometry: PatchGeometry,
    specs: &[GroupSpec],
    stride: usize,
    cfg: &EmConfig,
) -> Result<TrainedModel> {
    if images.is_empty() {
        return Err(Error::invalid("training needs at least one image"));
    }
    validate_specs(specs)?;
    cfg.validate()?;
    let mut all = PatchDataset::new(geometry.len());
    for (i, img) in images.iter().enumerate() {
        all.append(&extract_patches(img, geometry, stride, i as u32)?)?;
    }
    let groups = partition_patches(&all, specs, cfg.seed)?;
    for (g, s) in groups.iter().zip(specs) {
        if g.len() < s.components {
            return Err(Error::invalid(format!(
                "group {} has {} patches but needs at least {} for its components",
                s.index,
                g.len(),
                s.components
            )));
        }
    }
    let fits: Vec<Result<EmFit>> = groups
        .par_iter()
        .zip(specs)
        .map(|(data, spec)| {
            let group_cfg = EmConfig { seed: cfg.seed.wrapping_add(spec.index as u64), ..cfg.clone() };
            em_fit(data, spec.components, &group_cfg)
        })
        .collect();
    let mut reports = Vec::with_capacity(specs.len());
    let mut parts = Vec::with_capacity(specs.len());
    for ((fit, spec), data) in fits.into_iter().zip(specs).zip(&groups) {
        let fit = fit.map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("group {}: {m}", spec.index)),
            Error::Numerical(m) => Error::Numerical(format!("group {}: {m}", spec.index)),
            other => other,
        })?;
        parts.push((spec.mixture_weight, fit.mixture.clone()));
        reports.push(GroupReport { index: spec.index, n_patches: data.len(), fit });
    }
    let mixture = merge_mixtures(&parts)?;
    let model = GmMrfModel::new(geometry, mixture, RegParams::default())?;
    Ok(TrainedModel { model, groups: reports })
}
