//! Counter-keyed random streams.
//!
//! Every trajectory owns a private xoshiro256++ generator whose state is
//! derived from `(seed, stream, task, trajectory)`. Nothing about the stream
//! depends on which worker runs the task or in which order tasks finish, so a
//! run is bit-reproducible for any thread count.

use std::f64::consts::TAU;
use std::sync::LazyLock;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// SplitMix64 finaliser, used to decorrelate the key components.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one independent random stream family inside a run, e.g. one
/// quadrature node or one step radius of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        StreamKey { seed, stream }
    }

    /// Derived key for a sub-experiment; distinct `tag`s give unrelated streams.
    pub fn child(self, tag: u64) -> Self {
        StreamKey { seed: self.seed, stream: mix64(self.stream ^ mix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))) }
    }

    pub fn trajectory(self, task: u64, trajectory: u64) -> TrajectoryRng {
        let mut k = mix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        k = mix64(k ^ self.stream);
        k = mix64(k ^ task.wrapping_mul(0xd6e8_feb8_6659_fd93));
        k = mix64(k ^ trajectory);
        TrajectoryRng { inner: Xoshiro256PlusPlus::seed_from_u64(k) }
    }
}

pub struct TrajectoryRng {
    inner: Xoshiro256PlusPlus,
}

impl TrajectoryRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as i64) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform point of the open unit disk via the polar map
    /// `(sqrt(u1), 2π·u2)`. Always consumes exactly two 64-bit draws.
    #[inline]
    pub fn unit_disk(&mut self) -> (f64, f64) {
        let r = self.uniform().sqrt();
        let (c, s) = cos_sin_bits(self.next_u64());
        (r * c, r * s)
    }
}

const TURN_TABLE_BITS: u32 = 10;
const TURN_TABLE_LEN: usize = 1 << TURN_TABLE_BITS;

/// `(cos, sin)` at the midpoints of `TURN_TABLE_LEN` equal arcs of the circle.
static TURN_TABLE: LazyLock<Box<[(f64, f64); TURN_TABLE_LEN]>> = LazyLock::new(|| {
    let mut t = Box::new([(0.0, 0.0); TURN_TABLE_LEN]);
    for (k, e) in t.iter_mut().enumerate() {
        let (s, c) = (TAU * (k as f64 + 0.5) / TURN_TABLE_LEN as f64).sin_cos();
        *e = (c, s);
    }
    t
});

/// `(cos 2πu, sin 2πu)` for `u` in `[0, 1)`.
#[inline]
pub fn cos_sin_turn(u: f64) -> (f64, f64) {
    let x = u * TURN_TABLE_LEN as f64;
    let k = x.floor();
    turn_residual((k as usize) & (TURN_TABLE_LEN - 1), x - k)
}

/// `(cos, sin)` of the angle `2π·bits/2⁶⁴`: the top bits select a table arc and
/// the remaining 53 bits the position inside it, so no float-to-int
/// conversion is needed on the hot path.
#[inline]
pub fn cos_sin_bits(bits: u64) -> (f64, f64) {
    let k = (bits >> (64 - TURN_TABLE_BITS)) as usize;
    let frac = (((bits << TURN_TABLE_BITS) >> 11) as i64) as f64 * (1.0 / (1u64 << 53) as f64);
    turn_residual(k, frac)
}

/// Table lookup at the midpoint of arc `k`, then rotation by the residual
/// angle `|δ| ≤ π/1024`, whose sine and cosine come from short Taylor series
/// (truncation error below 1e-18). Replaces `f64::sin_cos` in the step
/// sampler, where libm dominated the per-step cost.
#[inline(always)]
fn turn_residual(k: usize, frac: f64) -> (f64, f64) {
    let d = (frac - 0.5) * (TAU / TURN_TABLE_LEN as f64);
    let d2 = d * d;
    let sd = d * (1.0 - d2 * (1.0 / 6.0 - d2 * (1.0 / 120.0)));
    let cd = 1.0 - d2 * (0.5 - d2 * (1.0 / 24.0 - d2 * (1.0 / 720.0)));
    let (c, s) = TURN_TABLE[k];
    (c * cd - s * sd, s * cd + c * sd)
}
