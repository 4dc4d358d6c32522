use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use zerocell::asymptotics::{regime_report, ExponentRule, IntensityRule, RegimeSpec};
use zerocell::exact::{calibrated_intensity, mean_volume, moment_bounds, second_moment, variance};
use zerocell::simulator::{choose_radius, cross_validate, run_simulation, truncation_bias};
use zerocell::{ModelParams, QuadConfig};

fn params(n: u32, r: f64, gamma: f64) -> ModelParams {
    ModelParams::new(n, r, gamma).unwrap()
}

#[test]
fn second_moment_routes_agree() {
    let cfg = QuadConfig::default();
    for (n, r) in [(2, 1.0), (3, 2.0), (4, 6.0)] {
        let p = params(n, r, 1.0);
        let direct = second_moment(&p, &cfg).unwrap().estimate();
        let v = variance(&p, &cfg).unwrap();
        assert_relative_eq!(direct, v.second_moment.to_f64(), max_relative = 1e-8);
        let b = moment_bounds(&p, 2).unwrap();
        assert!(b.lower.to_f64() <= direct && direct <= b.upper.to_f64());
    }
}

#[test]
fn voronoi_case_matches_simulation() {
    // r = n = 2 is the planar Poisson–Voronoi typical cell
    let p = params(2, 2.0, 1.0);
    let exact = variance(&p, &QuadConfig::default()).unwrap();
    assert_relative_eq!(exact.mean.to_f64(), 4.0 * PI, max_relative = 1e-13);
    let s = run_simulation(&p, 4000, 0, 1e-4, 31).unwrap();
    let cv = cross_validate(&s, exact.mean.to_f64(), exact.variance.to_f64(), exact.quad_error);
    assert!(cv.pass(), "{cv:?}");
}

#[test]
fn stationary_planar_simulation_matches_exact() {
    let p = params(2, 3.0, 0.5);
    let exact = variance(&p, &QuadConfig::default()).unwrap();
    let s = run_simulation(&p, 3000, 0, 1e-4, 5).unwrap();
    let cv = cross_validate(&s, exact.mean.to_f64(), exact.variance.to_f64(), exact.quad_error);
    assert!(cv.pass(), "{cv:?}");
}

#[test]
fn hit_or_miss_path_in_three_dimensions() {
    let p = params(3, 1.0, 1.0);
    let s = run_simulation(&p, 300, 5000, 1e-3, 12).unwrap();
    let exact = variance(&p, &QuadConfig::default()).unwrap();
    let cv = cross_validate(&s, exact.mean.to_f64(), exact.variance.to_f64(), exact.quad_error);
    assert!(cv.mean.pass, "{cv:?}");
    assert!(s.noise_variance > 0.0 && s.points == 5000);
}

#[test]
fn calibrated_regime_agrees_with_pointwise_engine() {
    let spec = RegimeSpec::new(ExponentRule::Proportional(0.5), IntensityRule::Calibrated(2.0)).unwrap();
    let cfg = QuadConfig::default();
    for row in regime_report(&spec, 3, 7, &cfg).unwrap() {
        let g = calibrated_intensity(row.n, row.r, 2.0).unwrap();
        assert_eq!(row.gamma, g);
        let v = variance(&params(row.n, row.r, g), &cfg).unwrap();
        assert_eq!(row.variance.unwrap().variance, v.variance);
        assert_relative_eq!(row.mean.unwrap().to_f64(), 0.5, max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variance_scales_with_intensity(n in 2u32..6, r in 0.5f64..6.0, g in 0.2f64..5.0) {
        let cfg = QuadConfig::default();
        let base = variance(&params(n, r, 1.0), &cfg).unwrap().variance;
        let scaled = variance(&params(n, r, g), &cfg).unwrap().variance;
        let expected = base * zerocell::LogValue::from_f64(g).powf(-2.0 * f64::from(n) / r);
        prop_assert!(((scaled / expected).ln()).abs() < 1e-8);
    }

    #[test]
    fn mean_scales_with_intensity(n in 2u32..30, r in 0.2f64..50.0, g in 0.01f64..100.0) {
        let m1 = mean_volume(&params(n, r, 1.0));
        let mg = mean_volume(&params(n, r, g));
        prop_assert!(((mg / m1).ln() + f64::from(n) / r * g.ln()).abs() < 1e-9);
    }

    #[test]
    fn truncation_bias_decreases_with_radius(n in 2u32..8, r in 0.5f64..8.0, rad in 0.5f64..20.0) {
        let p = params(n, r, 1.0);
        let near = truncation_bias(&p, rad).unwrap();
        let far = truncation_bias(&p, rad * 1.5).unwrap();
        prop_assert!(far.mean <= near.mean && far.second <= near.second);
        prop_assert!(near.mean <= mean_volume(&p).to_f64() * (1.0 + 1e-12));
    }

    #[test]
    fn tighter_budget_needs_larger_radius(n in 2u32..8, r in 0.5f64..8.0, e in 1e-8f64..1e-2) {
        let p = params(n, r, 1.0);
        prop_assert!(choose_radius(&p, e / 10.0).unwrap() >= choose_radius(&p, e).unwrap());
    }
}
