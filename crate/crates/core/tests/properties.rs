//! Structural invariants, checked on random inputs.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wkb_disperse::jost::JostConfig;
use wkb_disperse::liouville::LiouvilleMap;
use wkb_disperse::oscillatory::{smooth_cutoff, split_partition};
use wkb_disperse::potential::PotentialModel;
use wkb_disperse::propagator::{required_lambda, PropagatorConfig, PropagatorEngine};
use wkb_disperse::spectral::{Branch, SpectralDensityEvaluator};

fn model(k: usize) -> PotentialModel {
    match k {
        0 => PotentialModel::coulomb(1.0, 1.0).unwrap(),
        1 => PotentialModel::coulomb(1.0, 0.5).unwrap(),
        _ => PotentialModel::anisotropic(2.0, 1.0, 1.0, 1.0).unwrap(),
    }
}

const XS: [f64; 7] = [-12.0, -5.0, -1.5, 0.0, 2.0, 6.0, 15.0];
const TS: [f64; 3] = [0.5, 1.0, 3.0];

fn engine() -> &'static PropagatorEngine {
    static E: OnceLock<PropagatorEngine> = OnceLock::new();
    E.get_or_init(|| {
        let cfg = PropagatorConfig::default();
        PropagatorEngine::new(&model(2), &XS, required_lambda(&TS, 15.0, &cfg), &cfg).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn density_is_symmetric(k in 0usize..3, l in 0.05f64..4.0, x in -40.0f64..40.0, xp in -40.0f64..40.0) {
        let ev = SpectralDensityEvaluator::new(&model(k), l, 41.0, &JostConfig::default()).unwrap();
        let (a, b) = (ev.density(x, xp).unwrap(), ev.density(xp, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn wkb_components_reconstruct_density(k in 0usize..3, l in 0.05f64..4.0, x in -40.0f64..40.0, xp in -40.0f64..40.0) {
        let ev = SpectralDensityEvaluator::new(&model(k), l, 41.0, &JostConfig::default()).unwrap();
        let w = ev.wkb_components_branch(Branch::for_points(x, xp), x, xp).unwrap();
        let d = ev.density(x, xp).unwrap();
        prop_assert!((w.sum() - d).norm() <= 1e-8, "{} vs {d}", w.sum());
    }

    #[test]
    fn liouville_roundtrip(k in 0usize..3, l in 0.01f64..10.0, x in -300.0f64..300.0) {
        let map = LiouvilleMap::new(model(k), l, 0.0, 1e-10).unwrap();
        let back = map.inverse(map.forward(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-8, "{x} -> {back}");
    }

    #[test]
    fn cutoff_partition_is_exact(m in 0.1f64..100.0, c in 0.5f64..3.0) {
        let lambdas: Vec<f64> = (0..400).map(|i| 0.01 * 1.02f64.powi(i)).collect();
        let p = split_partition(&lambdas, |l| (C64::new((c * l).cos(), l), C64::new(-c * (c * l).sin(), 1.0)), m);
        prop_assert!(p.max_identity_error <= 1e-14);
        for &l in &lambdas {
            let v = smooth_cutoff(m * l);
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(p.c_first.is_finite() && p.c_second.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn kernel_is_symmetric_and_time_reversible(i in 0usize..7, j in 0usize..7, it in 0usize..3) {
        let e = engine();
        let t = TS[it];
        let f = e.kernel_entries(t, &[(i, j), (j, i)]).unwrap();
        let b = e.kernel_entries(-t, &[(i, j)]).unwrap();
        let tol = f[0].error + f[1].error + 1e-9;
        prop_assert!((f[0].value - f[1].value).norm() <= tol, "{} vs {}", f[0].value, f[1].value);
        prop_assert!((b[0].value - f[0].value.conj()).norm() <= f[0].error + b[0].error + 1e-9);
    }
}
