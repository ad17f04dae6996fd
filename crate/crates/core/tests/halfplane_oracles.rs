use std::f64::consts::PI;

use diskwalk::halfplane::{
    constant_term, exit_functional, k_by_limit, k_by_quadrature, renewal_limit, KOptions, DEFAULT_FAR_MARGIN, K_REFERENCE,
};
use diskwalk::rng::StreamKey;
use diskwalk::stats::ks_two_sample;
use diskwalk::walk::{halfplane_path, halfplane_path_2d, HalfPlaneOutcome, WalkConfig};

#[test]
fn renewal_limit_matches_published_constant() {
    // published K = 0.2647664 ± 0.0000026
    assert!((renewal_limit() - 0.2647664).abs() <= 2.6e-6, "{}", renewal_limit());
    assert!((K_REFERENCE - 0.2647664).abs() < 1e-15);
}

#[test]
fn constant_term_value() {
    assert!((constant_term() - 0.113176848421).abs() < 1e-11);
    assert!((constant_term() * 45.0 * PI - 16.0).abs() < 1e-12);
}

#[test]
fn exit_functional_scales_with_step_radius() {
    let key = StreamKey::new(4, 4);
    let (y, h) = (0.2, 0.37);
    let small = exit_functional(y, &WalkConfig::new(h, 4, 20_000).unwrap(), key, DEFAULT_FAR_MARGIN).unwrap();
    let unit = exit_functional(y / h, &WalkConfig::new(1.0, 4, 20_000).unwrap(), key, DEFAULT_FAR_MARGIN).unwrap();
    let rel = (small.estimate.mean - h * unit.estimate.mean).abs() / small.estimate.mean;
    assert!(rel < 1e-3, "{} vs {}", small.estimate.mean, h * unit.estimate.mean);
    assert!((small.estimate.stderr - h * unit.estimate.stderr).abs() / small.estimate.stderr < 0.05);
}

fn overshoots(two_d: bool, seed: u64) -> Vec<f64> {
    let key = StreamKey::new(seed, 0);
    (0..20_000)
        .filter_map(|i| {
            let mut rng = key.trajectory(0, i);
            let out = if two_d {
                halfplane_path_2d(&mut rng, 0.5, 1.0, f64::INFINITY, 1_000_000)
            } else {
                halfplane_path(&mut rng, 0.5, 1.0, f64::INFINITY, 1_000_000)
            };
            match out {
                HalfPlaneOutcome::Exited { overshoot, .. } => Some(overshoot),
                _ => None,
            }
        })
        .collect()
}

#[test]
fn projected_walk_matches_planar_walk() {
    let mut a = overshoots(false, 10);
    let mut b = overshoots(true, 11);
    assert!(a.len() > 19_000 && b.len() > 19_000);
    let (_, p) = ks_two_sample(&mut a, &mut b);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn closure_does_not_bias_the_overshoot() {
    // Walks left unclosed for a long way against the default closure.
    let cfg = WalkConfig::new(1.0, 6, 50_000).unwrap();
    let key = StreamKey::new(6, 3);
    let near = exit_functional(1.0, &cfg, key, DEFAULT_FAR_MARGIN).unwrap().estimate;
    let far = exit_functional(1.0, &cfg, key, 64.0).unwrap().estimate;
    assert!((near.mean - far.mean).abs() < 3.0 * near.stderr, "{near:?} {far:?}");
}

#[test]
fn coarse_quadrature_reproduces_the_constant() {
    let k = k_by_quadrature(&KOptions::new(16, 20_000, 3)).unwrap();
    let e = k.k_value;
    assert!((e.mean - K_REFERENCE).abs() < 4.0 * e.stderr + 1e-4, "{e:?}");
    assert_eq!(k.node_angles.len(), 16);
}

#[test]
fn high_start_approaches_the_renewal_limit() {
    let lim = k_by_limit(&[2.0, 16.0], 100_000, 8, DEFAULT_FAR_MARGIN).unwrap();
    let t = lim.terminal;
    assert!((t.mean - lim.renewal_limit).abs() < 4.0 * t.stderr, "{t:?}");
    assert_eq!(lim.increments.len(), 1);
}
