mod common;

use gmmrf_core::model::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn responsibilities_sum_to_one(seed in 0u64..10_000, k in 1usize..6, x in -300.0f64..300.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = common::random_mixture(&mut rng, k, 4, 0.0, 100.0, 1.0, 400.0);
        let r = mix.responsibilities(&[x, -x, 0.5 * x, 1.0]).unwrap();
        let s: f64 = r.as_slice().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(r.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn responsibilities_are_shift_equivariant(seed in 0u64..10_000, shift in -500.0f64..500.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = common::random_mixture(&mut rng, 3, 4, 0.0, 50.0, 10.0, 400.0);
        let moved = GaussianMixture::from_parts(
            &mix.weights(),
            &mix.components().iter().map(|c| c.mean().iter().map(|m| m + shift).collect()).collect::<Vec<_>>(),
            &mix.components().iter().map(|c| c.covariance().clone()).collect::<Vec<_>>(),
        ).unwrap();
        let patch = [3.0, -7.0, 12.0, 0.0];
        let shifted: Vec<f64> = patch.iter().map(|v| v + shift).collect();
        let a = mix.responsibilities(&patch).unwrap();
        let b = moved.responsibilities(&shifted).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn surrogate_majorizes(seed in 0u64..10_000, k in 1usize..8) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let vx: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..50.0)).collect();
        let va: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..50.0)).collect();
        let q = exp_mixture_surrogate(&w, &vx, &va).unwrap();
        let f = neg_log_exp_mixture(&w, &vx).unwrap();
        prop_assert!(q >= f - 1e-10 * (1.0 + f.abs()));
        let at = exp_mixture_surrogate(&w, &va, &va).unwrap();
        prop_assert!((at - neg_log_exp_mixture(&w, &va).unwrap()).abs() < 1e-10 * (1.0 + at.abs()));
    }

    #[test]
    fn scaled_average_eigenvalue_identity(seed in 0u64..10_000, p in 0.0f64..=1.0, alpha in 1.0f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = common::random_mixture(&mut rng, 3, 4, 0.0, 50.0, 1.0, 5000.0);
        let scaled = apply_covariance_scaling(&mix, p, alpha).unwrap();
        for (c, s) in mix.components().iter().zip(scaled.components()) {
            let lam = component_average_eigenvalue(c);
            let want = lam.powf(1.0 - p) * alpha.powf(2.0 * p);
            let got = component_average_eigenvalue(s);
            prop_assert!((got / want - 1.0).abs() < 1e-9);
            prop_assert_eq!(c.mean(), s.mean());
        }
    }

    #[test]
    fn average_eigenvalue_is_homogeneous(seed in 0u64..10_000, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: DMatrix<f64> = common::random_spd(&mut rng, 5, 0.5, 50.0);
        let a = average_eigenvalue(&r).unwrap();
        let b = average_eigenvalue(&(r * c)).unwrap();
        prop_assert!((b / (c * a) - 1.0).abs() < 1e-10);
    }
}
