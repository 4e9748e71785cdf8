//! Continuum quantities against the finite-difference box oracle.

use std::sync::OnceLock;

use wkb_disperse::jost::JostConfig;
use wkb_disperse::oracle::{DiscreteOracle, OracleConfig};
use wkb_disperse::potential::PotentialModel;
use wkb_disperse::propagator::{required_lambda, PropagatorConfig, PropagatorEngine};
use wkb_disperse::spectral::SpectralDensityEvaluator;

fn coulomb() -> PotentialModel {
    PotentialModel::coulomb(1.0, 1.0).unwrap()
}

fn oracle() -> &'static DiscreteOracle {
    static O: OnceLock<DiscreteOracle> = OnceLock::new();
    O.get_or_init(|| {
        DiscreteOracle::discretize_and_solve(
            &coulomb(),
            &OracleConfig {
                l: 200.0,
                h: 0.05,
                ..OracleConfig::default()
            },
        )
        .unwrap()
    })
}

#[test]
fn smoothed_density_matches_evaluator() {
    let o = oracle();
    let pairs = [(0.0, 0.0), (1.0, -2.0), (3.0, 3.0), (-4.0, 0.5)];
    // below λ ≈ 0.45 the ±8η Gaussian no longer fits above the zero threshold on this box
    for lambda in [0.5, 0.7, 1.5] {
        let ev =
            SpectralDensityEvaluator::new(&coulomb(), lambda, 5.0, &JostConfig::default()).unwrap();
        let scale = ev.density(0.0, 0.0).unwrap().abs();
        // a few level spacings: averages the box modes, still narrow against the λ² scale of ρ
        let eta = 3.0 * o.level_spacing(lambda * lambda);
        for (x, xp) in pairs {
            let r = o.density_ref(lambda, eta, x, xp).unwrap();
            let d = ev.density(x, xp).unwrap();
            assert!(
                (r - d).abs() <= 0.05 * scale,
                "λ = {lambda}, ({x}, {xp}): oracle {r}, evaluator {d}"
            );
        }
    }
}

fn windowed_deviation(t: f64) -> f64 {
    let window = Some(1.25);
    let xs: Vec<f64> = (0..9).map(|i| -8.0 + 2.0 * i as f64).collect();
    let cfg = PropagatorConfig {
        window,
        ..PropagatorConfig::default()
    };
    let eng =
        PropagatorEngine::new(&coulomb(), &xs, required_lambda(&[t], 8.0, &cfg), &cfg).unwrap();
    let idx: Vec<usize> = (0..xs.len()).collect();
    let k = eng.kernel_grid(t, &idx, &idx).unwrap();
    let r = oracle().propagator_grid(t, &xs, &xs, window).unwrap();
    let dev = (0..xs.len())
        .flat_map(|i| (0..xs.len()).map(move |j| (i, j)))
        .map(|(i, j)| (k.values[i][j] - r[i][j]).norm());
    dev.fold(0.0, f64::max) / k.sup().0
}

#[test]
fn windowed_kernel_matches_oracle_at_moderate_time() {
    let d = windowed_deviation(2.0);
    assert!(d <= 0.05, "relative deviation {d}");
}

#[test]
fn windowed_kernel_matches_oracle_at_short_time() {
    let d = windowed_deviation(0.1);
    assert!(d <= 0.05, "relative deviation {d}");
}

#[test]
fn oracle_refuses_too_narrow_broadening() {
    let o = oracle();
    let eta = 0.5 * o.level_spacing(1.0);
    assert!(matches!(
        o.density_ref(1.0, eta, 0.0, 0.0),
        Err(wkb_disperse::Error::BroadeningTooNarrow { .. })
    ));
}
