mod common;

use proptest::prelude::*;
use rand::Rng;
use sfa_core::lab::{
    align, alignment_mse, embed, logistic_series, slowness_eta, EmbeddingSpec, LogisticConfig,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedding_recovers_samples(m in 1usize..=30, tau in 1usize..=3, extra in 0usize..=20) {
        let spec = EmbeddingSpec::new(m, tau).unwrap();
        let len = spec.span() + extra;
        let w: Vec<f64> = (0..len).map(|t| t as f64 * 1.5 - 7.0).collect();
        let e = embed(&w, spec).unwrap();
        prop_assert_eq!(e.vectors.nrows(), len - tau * (m - 1));
        let before = tau * (m - 1) / 2;
        for (row, &c) in e.centers.iter().enumerate() {
            prop_assert_eq!(c, row + before);
            for j in 0..m {
                prop_assert_eq!(e.vectors[(row, j)], w[c - before + j * tau]);
            }
        }
    }

    #[test]
    fn eta_affine_invariance(seed in any::<u64>(), c in -50.0f64..50.0, d in -1e3f64..1e3) {
        prop_assume!(c.abs() > 1e-3);
        let mut g = common::rng(seed);
        let y: Vec<f64> = (0..300).map(|_| g.random::<f64>()).collect();
        let e0 = slowness_eta(&y).unwrap();
        let z: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        let e1 = slowness_eta(&z).unwrap();
        prop_assert!(e1 >= 0.0);
        prop_assert!((e1 - e0).abs() <= 1e-9 * e0);
    }

    #[test]
    fn alignment_beats_grid(seed in any::<u64>()) {
        let mut g = common::rng(seed);
        let force: Vec<f64> = (0..40).map(|_| g.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = force.iter().map(|v| -1.3 * v + g.random::<f64>()).collect();
        let al = align(&force, &y).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let a = al.a - 1.0 + 0.05 * i as f64;
                let b = al.b - 1.0 + 0.05 * j as f64;
                prop_assert!(al.mse <= alignment_mse(&force, &y, a, b) + 1e-15);
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible(seed in any::<u64>(), noise in 0.0f64..1e-3) {
        let cfg = LogisticConfig { length: 300, noise_sigma: noise, seed, ..Default::default() };
        let a = logistic_series(&cfg).unwrap();
        let b = logistic_series(&cfg).unwrap();
        prop_assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
