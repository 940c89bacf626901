use gmmrf_core::train::{em_fit, EmConfig, PatchDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_dataset(rng: &mut ChaCha8Rng, dim: usize, clusters: usize, n: usize) -> PatchDataset {
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| (0..dim).map(|_| rng.random_range(-20.0..20.0)).collect()).collect();
    let spreads: Vec<f64> = (0..clusters).map(|_| rng.random_range(0.5..4.0)).collect();
    let mut flat = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = rng.random_range(0..clusters);
        let noise = Normal::new(0.0, spreads[c]).unwrap();
        flat.extend(centers[c].iter().map(|m| m + noise.sample(rng)));
    }
    PatchDataset::from_rows(dim, flat, 0).unwrap()
}

#[test]
fn objective_never_decreases_over_random_datasets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let dim = rng.random_range(1..5);
        let clusters = rng.random_range(1..5);
        let k = rng.random_range(1..5);
        let data = random_dataset(&mut rng, dim, clusters, 200);
        let cfg = EmConfig { max_iters: 40, seed: trial, ..Default::default() };
        let fit = em_fit(&data, k, &cfg).unwrap();
        for (t, w) in fit.objective_trace.windows(2).enumerate() {
            if fit.rescues.contains(&(t + 1)) {
                continue;
            }
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "trial {trial} step {}: {} -> {}", t + 1, w[0], w[1]);
        }
    }
}

#[test]
fn recovers_separated_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut flat = Vec::new();
    let noise = Normal::new(0.0, 1.0).unwrap();
    for i in 0..2000 {
        let m = if i % 4 == 0 { 30.0 } else { -10.0 };
        flat.push(m + noise.sample(&mut rng));
        flat.push(m + noise.sample(&mut rng));
    }
    let data = PatchDataset::from_rows(2, flat, 0).unwrap();
    let fit = em_fit(&data, 2, &EmConfig::default()).unwrap();
    let mut comps: Vec<_> = fit.mixture.components().iter().map(|c| (c.mean()[0], c.weight())).collect();
    comps.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!((comps[0].0 + 10.0).abs() < 0.2 && (comps[1].0 - 30.0).abs() < 0.2);
    assert!((comps[0].1 - 0.75).abs() < 0.01);
    assert!(fit.converged);
}
