//! Tissue-like grouping of patches by sample mean and standard deviation.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::patches::PatchDataset;
use crate::error::{Error, Result};

fn unbounded_std() -> [f64; 2] {
    [0.0, f64::INFINITY]
}

/// One training group: half-open HU ranges on patch mean and std, EM size and merge weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub index: u32,
    /// `[lo, hi)` on the patch mean, HU. Infinite bounds allowed.
    pub mean_range: [f64; 2],
    /// `[lo, hi)` on the patch standard deviation, HU. Absent means unbounded.
    #[serde(default = "unbounded_std")]
    pub std_range: [f64; 2],
    /// Maximum number of patches retained for EM.
    pub sample_target: usize,
    /// Number of mixture components fitted to this group.
    pub components: usize,
    /// Weight of this group's mixture in the merged model.
    pub mixture_weight: f64,
}

impl GroupSpec {
    pub fn contains(&self, mean: f64, std: f64) -> bool {
        mean >= self.mean_range[0] && mean < self.mean_range[1] && std >= self.std_range[0] && std < self.std_range[1]
    }
}

/// Six-group partition over mean/std used for CT patches: air, lung, smooth
/// soft tissue, low-contrast edge, high-contrast edge, bone.
///
/// The air group is open below so that noisy air patches under -1000 HU still
/// belong to exactly one group.
pub fn ct_tissue_groups() -> Vec<GroupSpec> {
    let inf = f64::INFINITY;
    let g = |index, mean_range, std_range, sample_target, components, mixture_weight| GroupSpec {
        index,
        mean_range,
        std_range,
        sample_target,
        components,
        mixture_weight,
    };
    vec![
        g(1, [-inf, -850.0], [0.0, inf], 5_000, 1, 0.05),
        g(2, [-850.0, -200.0], [0.0, inf], 100_000, 15, 0.17),
        g(3, [-200.0, 200.0], [0.0, 25.0], 50_000, 5, 0.40),
        g(4, [-200.0, 200.0], [25.0, 80.0], 100_000, 15, 0.25),
        g(5, [-200.0, 200.0], [80.0, inf], 100_000, 15, 0.04),
        g(6, [200.0, inf], [0.0, inf], 100_000, 15, 0.09),
    ]
}

pub fn validate_specs(specs: &[GroupSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("at least one group is required"));
    }
    let total: f64 = specs.iter().map(|s| s.mixture_weight).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("group mixture weights sum to {total}, expected 1")));
    }
    for s in specs {
        if s.components == 0 {
            return Err(Error::invalid(format!("group {} requests zero components", s.index)));
        }
        if !(s.mixture_weight >= 0.0) {
            return Err(Error::invalid(format!("group {} has a negative mixture weight", s.index)));
        }
        if s.sample_target == 0 {
            return Err(Error::invalid(format!("group {} has a zero sample target", s.index)));
        }
        if s.mean_range[0] >= s.mean_range[1] || s.std_range[0] >= s.std_range[1] {
            return Err(Error::invalid(format!("group {} has an empty range", s.index)));
        }
    }
    Ok(())
}

/// Sample mean and population standard deviation (divide by `L`).
pub fn patch_stats(patch: &[f64]) -> (f64, f64) {
    let n = patch.len() as f64;
    let mean = patch.iter().sum::<f64>() / n;
    let var = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Index into `specs` of the unique group containing the patch.
pub fn assign_group(patch: &[f64], specs: &[GroupSpec]) -> Result<usize> {
    let (mean, std) = patch_stats(patch);
    let mut hit: Option<usize> = None;
    for (i, s) in specs.iter().enumerate() {
        if s.contains(mean, std) {
            if let Some(prev) = hit {
                return Err(Error::invalid(format!(
                    "groups {} and {} overlap at mean {mean:.3} HU, std {std:.3} HU",
                    specs[prev].index, s.index
                )));
            }
            hit = Some(i);
        }
    }
    hit.ok_or_else(|| Error::invalid(format!("no group covers mean {mean:.3} HU, std {std:.3} HU")))
}

/// Splits `data` into one dataset per spec, subsampling uniformly without
/// replacement (order preserved) where a group exceeds its sample target.
pub fn partition_patches(data: &PatchDataset, specs: &[GroupSpec], seed: u64) -> Result<Vec<PatchDataset>> {
    validate_specs(specs)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
    for (i, p) in data.rows().enumerate() {
        members[assign_group(p, specs)?].push(i);
    }
    Ok(members
        .into_iter()
        .zip(specs)
        .enumerate()
        .map(|(g, (idx, spec))| {
            if idx.len() <= spec.sample_target {
                data.select(&idx)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(g as u64 + 1);
                let mut pick = sample(&mut rng, idx.len(), spec.sample_target).into_vec();
                pick.sort_unstable();
                data.select(&pick.into_iter().map(|i| idx[i]).collect::<Vec<_>>())
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group_of(patch: &[f64]) -> u32 {
        let specs = ct_tissue_groups();
        specs[assign_group(patch, &specs).unwrap()].index
    }

    #[test]
    fn table_weights_and_counts() {
        let specs = ct_tissue_groups();
        assert!((specs.iter().map(|s| s.mixture_weight).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(specs.iter().map(|s| s.components).sum::<usize>(), 66);
        validate_specs(&specs).unwrap();
    }

    #[test]
    fn air_patch_is_group_one() {
        assert_eq!(group_of(&[-1000.0; 9]), 1);
        assert_eq!(group_of(&[-1020.0; 9]), 1);
    }

    #[test]
    fn soft_tissue_groups_by_std() {
        // mean 0, population std s: half the pixels at +s, half at -s
        let p = |s: f64| vec![s, -s, s, -s];
        assert_eq!(group_of(&p(10.0)), 3);
        assert_eq!(group_of(&p(50.0)), 4);
        assert_eq!(group_of(&p(100.0)), 5);
        assert_eq!(group_of(&[500.0; 4]), 6);
        assert_eq!(group_of(&[-500.0; 4]), 2);
    }

    #[test]
    fn uncovered_patch_is_an_error() {
        let specs = vec![GroupSpec {
            index: 1,
            mean_range: [0.0, 10.0],
            std_range: unbounded_std(),
            sample_target: 10,
            components: 1,
            mixture_weight: 1.0,
        }];
        assert!(assign_group(&[20.0], &specs).is_err());
    }

    #[test]
    fn subsampling_respects_target() {
        let mut ds = PatchDataset::new(1);
        for i in 0..100 {
            ds.push(&[i as f64], 0);
        }
        let specs = vec![
            GroupSpec { index: 1, mean_range: [0.0, 50.0], std_range: unbounded_std(), sample_target: 10, components: 1, mixture_weight: 0.5 },
            GroupSpec { index: 2, mean_range: [50.0, 1e9], std_range: unbounded_std(), sample_target: 100, components: 1, mixture_weight: 0.5 },
        ];
        let parts = partition_patches(&ds, &specs, 3).unwrap();
        assert_eq!(parts[0].len(), 10);
        assert_eq!(parts[1].len(), 50);
        assert!(parts[0].rows().all(|r| r[0] < 50.0));
        let again = partition_patches(&ds, &specs, 3).unwrap();
        assert_eq!(parts, again);
    }
}
