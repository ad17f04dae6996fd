use std::f64::consts::PI;

use diskwalk::rng::StreamKey;
use diskwalk::stats::{ks_one_sample, RunningStats};
use diskwalk::walk::{sample_im_increment, sample_step};
use proptest::prelude::*;

fn steps(h: f64, n: u64, seed: u64) -> Vec<(f64, f64)> {
    let key = StreamKey::new(seed, 77);
    (0..n)
        .map(|i| {
            let mut rng = key.trajectory(0, i);
            let s = sample_step(&mut rng, h);
            (s.norm(), s.im.atan2(s.re))
        })
        .collect()
}

#[test]
fn radius_has_area_law() {
    let h = 0.3;
    let mut r: Vec<f64> = steps(h, 20_000, 1).iter().map(|s| s.0).collect();
    let (_, p) = ks_one_sample(&mut r, |x| (x / h).powi(2).clamp(0.0, 1.0));
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn angle_is_uniform() {
    let mut a: Vec<f64> = steps(1.0, 20_000, 2).iter().map(|s| s.1).collect();
    let (_, p) = ks_one_sample(&mut a, |x| ((x + PI) / (2.0 * PI)).clamp(0.0, 1.0));
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn second_moment_is_half_h_squared() {
    let h = 0.7;
    let mut st = RunningStats::new();
    for (r, _) in steps(h, 100_000, 3) {
        st.push(r * r);
    }
    let e = st.estimate();
    assert!((e.mean - h * h / 2.0).abs() < 4.0 * e.stderr, "{e:?}");
}

#[test]
fn vertical_increment_follows_semicircle_law() {
    let key = StreamKey::new(9, 1);
    let mut v: Vec<f64> = (0..20_000).map(|i| sample_im_increment(&mut key.trajectory(3, i))).collect();
    // CDF of (2/π)√(1−t²): 1/2 + (t√(1−t²) + asin t)/π
    let (_, p) = ks_one_sample(&mut v, |t| {
        let t = t.clamp(-1.0, 1.0);
        0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI
    });
    assert!(p > 1e-3, "p = {p}");
}

proptest! {
    #[test]
    fn steps_stay_inside_the_disk(seed in any::<u64>(), traj in 0u64..1_000_000, h in 1e-3f64..10.0) {
        let mut rng = StreamKey::new(seed, 0).trajectory(0, traj);
        for _ in 0..64 {
            prop_assert!(sample_step(&mut rng, h).norm() < h);
        }
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), task in 0u64..1000, traj in 0u64..100_000) {
        let key = StreamKey::new(seed, 5);
        let mut a = key.trajectory(task, traj);
        let mut b = key.trajectory(task, traj);
        for _ in 0..16 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
