use std::f64::consts::PI;

use diskwalk::density::BoundaryFn;
use diskwalk::domain::AnalyticDomain;
use diskwalk::experiments::blayer::{boundary_layer_laplacian, HarmonicTest};
use diskwalk::experiments::greens::{greens_compare, GreensOptions};
use diskwalk::experiments::sweep::{correction_sweep, discrete_integral, SweepOptions};
use diskwalk::rng::StreamKey;
use diskwalk::stats::ks_one_sample;
use diskwalk::walk::{collect_exit_points, DomainExit, WalkConfig};
use diskwalk::PlanePoint;
use proptest::prelude::*;

#[test]
fn exit_angle_follows_poisson_kernel() {
    let d = AnalyticDomain::unit_disk();
    let r0 = 0.5;
    let cfg = WalkConfig::new(0.02, 12, 4000).unwrap();
    let exits = collect_exit_points(PlanePoint::new(r0, 0.0), &d, &cfg, cfg.key()).unwrap();
    let mut angles: Vec<f64> = exits
        .iter()
        .map(|e| match e {
            DomainExit::Exited { point, .. } => point.im.atan2(point.re),
            other => panic!("{other:?}"),
        })
        .collect();
    // CDF of the Poisson kernel at r0 on (−π, π]
    let k = (1.0 + r0) / (1.0 - r0);
    let (_, p) = ks_one_sample(&mut angles, |t| 0.5 + ((k * (0.5 * t).tan()).atan()) / PI);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn upper_half_has_measure_one_half_on_disk() {
    let d = AnalyticDomain::unit_disk();
    let cfg = WalkConfig::new(0.05, 2, 40_000).unwrap();
    let r = discrete_integral(&BoundaryFn::UpperHalf, &d, &cfg, cfg.key()).unwrap();
    assert!((r.raw.mean - 0.5).abs() < 4.0 * r.raw.stderr, "{:?}", r.raw);
    assert!((r.controlled.mean - 0.5).abs() < 4.0 * r.controlled.stderr, "{:?}", r.controlled);
}

#[test]
fn squared_real_part_on_disk() {
    let d = AnalyticDomain::unit_disk();
    let cfg = WalkConfig::new(0.05, 3, 40_000).unwrap();
    let r = discrete_integral(&BoundaryFn::Re2, &d, &cfg, cfg.key()).unwrap();
    // the O(h) term vanishes on the centred disk
    assert!((r.raw.mean - 0.5).abs() < 4.0 * r.raw.stderr, "{:?}", r.raw);
    assert!((r.controlled.mean - 0.5).abs() < 4.0 * r.controlled.stderr, "{:?}", r.controlled);
    assert!(r.controlled.stderr < 0.2 * r.raw.stderr);
}

#[test]
fn doubling_budget_halves_variance() {
    let d = AnalyticDomain::cardioid(0.2).unwrap();
    let a = WalkConfig::new(0.08, 5, 40_000).unwrap();
    let b = WalkConfig::new(0.08, 5, 80_000).unwrap();
    let ea = discrete_integral(&BoundaryFn::Re2, &d, &a, StreamKey::new(5, 1)).unwrap().controlled;
    let eb = discrete_integral(&BoundaryFn::Re2, &d, &b, StreamKey::new(5, 2)).unwrap().controlled;
    let ratio = eb.stderr.powi(2) / ea.stderr.powi(2);
    assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
}

#[test]
fn centred_disk_sweep_has_zero_slope() {
    let d = AnalyticDomain::unit_disk();
    let mut opts = SweepOptions::new(BoundaryFn::Re2, vec![0.1, 0.05], 40_000, 4);
    opts.abs_floor = 1e-2;
    let r = correction_sweep(&d, &opts).unwrap();
    assert!(r.predicted_slope.abs() < 1e-12);
    let s = r.extrapolated_slope;
    assert!(s.mean.abs() < 3.0 * s.stderr, "{s:?}");
    for ((q, m), h) in r.ratios.iter().zip(&r.mc_integrals).zip(&r.h_values) {
        assert!((q.stderr - m.stderr / h).abs() < 1e-15);
    }
}

#[test]
fn green_function_bin_on_disk() {
    let d = AnalyticDomain::unit_disk();
    let mut opts = GreensOptions::new(0.05, 60_000, 0.1, 6);
    opts.collar_sectors = 0;
    let g = greens_compare(&d, &opts).unwrap();
    let bin = g.bins.iter().find(|b| (b.center.re - 0.5).abs() < 1e-9 && b.center.im.abs() < 1e-9).unwrap();
    assert!(bin.admissible);
    // 8 G_D(0, 0.5) = −8 ln(0.5)/2π
    assert!((8.0 * -(0.5f64).ln() / (2.0 * PI) - 0.88254).abs() < 1e-5);
    assert!((bin.gd8 - 0.88254).abs() < 0.01);
    assert!((bin.gh_scaled - bin.gd8).abs() < 4.0 * bin.gh_stderr + 0.6 * 0.05, "{bin:?}");
    // occupation identity
    let m = g.mass.difference;
    assert!(m.mean.abs() < 4.0 * m.stderr, "{m:?}");
    assert!((g.mass.occupation - g.mass.mean_steps).abs() < 1e-9);
}

#[test]
fn collar_excess_matches_overshoot_prediction() {
    let d = AnalyticDomain::unit_disk();
    let mut opts = GreensOptions::new(0.1, 30_000, 0.2, 7);
    opts.collar_u_samples = 50_000;
    let g = greens_compare(&d, &opts).unwrap();
    let c = g.collar[0];
    assert!(c.relative_error.abs() < 0.25, "{c:?}");
}

#[test]
fn boundary_layer_rates_on_cardioid() {
    let d = AnalyticDomain::cardioid(0.2).unwrap();
    for t in [0.5, 3.0] {
        for frac in [0.0, 0.5] {
            let a = boundary_layer_laplacian(&d, HarmonicTest::Re3, t, frac * 0.08, 0.08).unwrap();
            let b = boundary_layer_laplacian(&d, HarmonicTest::Re3, t, frac * 0.04, 0.04).unwrap();
            let ratio = b.diff / a.diff;
            assert!((0.15..=0.4).contains(&ratio), "t = {t}, l/h = {frac}: {ratio}");
        }
        let v = boundary_layer_laplacian(&d, HarmonicTest::Re2, t, 0.05, 0.05).unwrap();
        assert_eq!(v.numeric, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn constant_boundary_function_is_exact(which in 0usize..3, h in 0.03f64..0.15, seed in any::<u64>()) {
        let dom = match which {
            0 => AnalyticDomain::unit_disk(),
            1 => AnalyticDomain::cardioid(0.2).unwrap(),
            _ => AnalyticDomain::asymmetric(),
        };
        let h = h.min(0.9 * dom.reach());
        let cfg = WalkConfig::new(h, seed, 200).unwrap();
        let r = discrete_integral(&BoundaryFn::One, &dom, &cfg, cfg.key()).unwrap();
        prop_assert_eq!(r.raw.mean, 1.0);
        prop_assert_eq!(r.raw.stderr, 0.0);
    }
}
