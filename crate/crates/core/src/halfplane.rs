//! The half-plane overshoot functional `u(y) = E^{iy}|Im S_T|` and the
//! constant `K`.
//!
//! `T` is the first time the walk leaves the upper half-plane. Its mean is
//! infinite, so trajectories are not simulated to the end: a path that climbs
//! to `start + margin·h` is stopped there and scored with the renewal limit
//! `h·K∞ = lim_{y→∞} u(y)`, computed by quadrature in [`renewal_limit`]. The
//! neglected term is `u(level) − K∞`, which decays exponentially in the
//! margin; [`closure_bias`] measures it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::bessel::one_minus_charfn;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_on};
use crate::rng::StreamKey;
use crate::stats::{MCEstimate, RunningStats};
use crate::walk::{check_censoring, halfplane_path, HalfPlaneOutcome, WalkConfig};

/// Published Monte Carlo value of `K`, the default wherever `K` is injected.
pub const K_REFERENCE: f64 = 0.2647664;

/// Default closure margin, in step radii above the start height.
pub const DEFAULT_FAR_MARGIN: f64 = 8.0;

/// Samples per node for the pilot run used by variance reallocation.
pub const PILOT_SAMPLES: u64 = 100_000;

/// `16/(45π)`.
pub fn constant_term() -> f64 {
    16.0 / (45.0 * PI)
}

/// Angular weight `sin²θ − sin⁴θ/3 − θ·cosθ·sinθ` of the `K` integral.
pub fn integrand_weight(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let s2 = s * s;
    s2 - s2 * s2 / 3.0 - theta * c * s
}

/// Large-height limit of `u` for unit step radius:
/// `−(1/π)∫₀^∞ t⁻² ln(8(1−φ(t))/t²) dt`, with `φ` the characteristic
/// function of the step's imaginary part. Computed once and cached.
pub fn renewal_limit() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| renewal_limit_with(2000.0))
}

fn renewal_limit_with(cutoff: f64) -> f64 {
    let rule = gauss_legendre(16);
    let integrand = |t: f64| {
        if t < 1e-3 {
            // ln(1 − t²/24 + t⁴/1152 − …)/t² = −1/24 + O(t⁴)
            return -1.0 / 24.0;
        }
        (8.0 * one_minus_charfn(t) / (t * t)).ln() / (t * t)
    };
    let mut total = 0.0;
    let mut a = 0.0;
    while a < cutoff {
        let b = (a + 1.0).min(cutoff);
        total += integrate_on(&rule, a, b, integrand);
        a = b;
    }
    // ∫_T^∞ (ln 8 − 2 ln t)/t² dt; the oscillating remainder is O(T^{-5/2}).
    total += (8f64.ln() - 2.0 * cutoff.ln() - 2.0) / cutoff;
    -total / PI
}

/// Outcome of [`exit_functional`] together with the closure diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitFunctional {
    pub estimate: MCEstimate,
    /// Fraction of trajectories scored with the renewal limit.
    pub escaped_fraction: f64,
    /// Mean number of simulated steps per trajectory.
    pub mean_steps: f64,
}

/// Monte Carlo estimate of `E^{iy}|Im S_T|` for step radius `cfg.h`.
pub fn exit_functional(y: f64, cfg: &WalkConfig, key: StreamKey, margin: f64) -> Result<ExitFunctional> {
    cfg.validate()?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::config(format!("start height must be positive, got {y}")));
    }
    if !(margin > 0.0) {
        return Err(Error::config(format!("closure margin must be positive, got {margin}")));
    }
    let h = cfg.h;
    let ceiling = y + margin * h;
    let far_value = h * renewal_limit();
    let parts = crate::parallel::run_tasks(cfg.samples, |task| {
        let mut stats = RunningStats::new();
        let (mut escaped, mut steps) = (0u64, 0u64);
        for i in 0..task.len() {
            let mut rng = key.trajectory(task.task, i);
            match halfplane_path(&mut rng, y, h, ceiling, cfg.max_steps) {
                HalfPlaneOutcome::Exited { overshoot, steps: n } => {
                    stats.push(overshoot);
                    steps += n;
                }
                HalfPlaneOutcome::Escaped { steps: n, .. } => {
                    stats.push(far_value);
                    escaped += 1;
                    steps += n;
                }
                HalfPlaneOutcome::Censored => {
                    stats.push_censored();
                    steps += cfg.max_steps;
                }
            }
        }
        (stats, escaped, steps)
    });
    let mut stats = RunningStats::new();
    let (mut escaped, mut steps) = (0u64, 0u64);
    for (s, e, n) in &parts {
        stats.merge(s);
        escaped += e;
        steps += n;
    }
    let estimate = stats.estimate();
    check_censoring(estimate.censored, estimate.n)?;
    Ok(ExitFunctional { estimate, escaped_fraction: escaped as f64 / cfg.samples as f64, mean_steps: steps as f64 / cfg.samples as f64 })
}

/// Difference between closing at `margin` and at `reference_margin` (same
/// stream), estimating the neglected `u(level) − K∞` term.
pub fn closure_bias(y: f64, cfg: &WalkConfig, key: StreamKey, margin: f64, reference_margin: f64) -> Result<MCEstimate> {
    let a = exit_functional(y, cfg, key, margin)?.estimate;
    let b = exit_functional(y, cfg, key, reference_margin)?.estimate;
    // Shared streams make the difference far less noisy than either term; the
    // reported error conservatively ignores the positive correlation.
    Ok(MCEstimate { mean: a.mean - b.mean, stderr: a.stderr.hypot(b.stderr), n: a.n, censored: a.censored + b.censored })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Allocation {
    /// Same number of samples at every node.
    Equal,
    /// Neyman allocation from a pilot run of [`PILOT_SAMPLES`] per node.
    VarianceProportional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KOptions {
    pub nodes: usize,
    pub samples_per_node: u64,
    pub seed: u64,
    pub margin: f64,
    pub allocation: Allocation,
    /// Samples per node for the N vs 2N quadrature-error check; 0 disables it.
    pub check_samples_per_node: u64,
    pub max_steps: u64,
}

impl KOptions {
    pub fn new(nodes: usize, samples_per_node: u64, seed: u64) -> Self {
        KOptions {
            nodes,
            samples_per_node,
            seed,
            margin: DEFAULT_FAR_MARGIN,
            allocation: Allocation::Equal,
            check_samples_per_node: 0,
            max_steps: crate::walk::DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureCheck {
    pub coarse: MCEstimate,
    pub fine: MCEstimate,
    /// `fine − coarse`.
    pub difference: f64,
    pub difference_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KBreakdown {
    pub constant_term: f64,
    pub node_angles: Vec<f64>,
    pub node_weights: Vec<f64>,
    pub node_integrand_weights: Vec<f64>,
    pub node_estimates: Vec<MCEstimate>,
    pub k_value: MCEstimate,
    pub quadrature_check: Option<QuadratureCheck>,
    /// Set when the N vs 2N difference is statistically significant and
    /// larger than `k_value.stderr`.
    pub quadrature_limited: bool,
}

impl KBreakdown {
    /// Assembles `K̂` from per-node estimates.
    pub fn assemble(node_angles: Vec<f64>, node_weights: Vec<f64>, node_estimates: Vec<MCEstimate>) -> Self {
        let node_integrand_weights: Vec<f64> = node_angles.iter().map(|&t| integrand_weight(t)).collect();
        let scale = 8.0 / PI;
        let mut mean = constant_term();
        let mut var = 0.0;
        let (mut n, mut censored) = (0, 0);
        for ((w, iw), e) in node_weights.iter().zip(&node_integrand_weights).zip(&node_estimates) {
            let c = scale * w * iw;
            mean += c * e.mean;
            var += (c * e.stderr).powi(2);
            n += e.n;
            censored += e.censored;
        }
        KBreakdown {
            constant_term: constant_term(),
            node_angles,
            node_weights,
            node_integrand_weights,
            node_estimates,
            k_value: MCEstimate { mean, stderr: var.sqrt(), n, censored },
            quadrature_check: None,
            quadrature_limited: false,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, π/2]`.
pub fn angular_rule(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes);
    let half = FRAC_PI_2 / 2.0;
    (x.iter().map(|t| half * (t + 1.0)).collect(), w.iter().map(|v| v * half).collect())
}

fn node_key(seed: u64, nodes: usize, j: usize) -> StreamKey {
    StreamKey::new(seed, 0).child(((nodes as u64) << 32) | j as u64)
}

fn run_nodes(opts: &KOptions, nodes: usize, budgets: &[u64], salt: u64) -> Result<(Vec<f64>, Vec<f64>, Vec<MCEstimate>)> {
    let (angles, weights) = angular_rule(nodes);
    let mut estimates = Vec::with_capacity(nodes);
    for (j, &theta) in angles.iter().enumerate() {
        let cfg = WalkConfig::new(1.0, opts.seed, budgets[j])?.with_max_steps(opts.max_steps)?;
        let key = node_key(opts.seed ^ salt, nodes, j);
        estimates.push(exit_functional(theta.cos(), &cfg, key, opts.margin)?.estimate);
    }
    Ok((angles, weights, estimates))
}

/// `K = 16/(45π) + (8/π)∫₀^{π/2} w(θ)·u(cos θ) dθ` by Gauss–Legendre over
/// `θ`, with a Monte Carlo estimate of `u` at each node.
pub fn k_by_quadrature(opts: &KOptions) -> Result<KBreakdown> {
    if opts.nodes < 8 {
        return Err(Error::config(format!("k quadrature needs at least 8 nodes, got {}", opts.nodes)));
    }
    if opts.samples_per_node < 2 {
        return Err(Error::config("need at least 2 samples per node"));
    }
    let budgets = match opts.allocation {
        Allocation::Equal => vec![opts.samples_per_node; opts.nodes],
        Allocation::VarianceProportional => {
            let pilot = KOptions { samples_per_node: PILOT_SAMPLES, ..opts.clone() };
            let (angles, weights, est) = run_nodes(&pilot, opts.nodes, &vec![PILOT_SAMPLES; opts.nodes], 0x9170_7f11)?;
            let spread: Vec<f64> = (0..opts.nodes)
                .map(|j| (weights[j] * integrand_weight(angles[j])).abs() * est[j].stderr * (est[j].n as f64).sqrt())
                .collect();
            let total: f64 = spread.iter().sum();
            let budget = opts.samples_per_node * opts.nodes as u64;
            spread
                .iter()
                .map(|s| if total > 0.0 { ((s / total) * budget as f64).round().max(2.0) as u64 } else { opts.samples_per_node })
                .collect()
        }
    };
    let (angles, weights, estimates) = run_nodes(opts, opts.nodes, &budgets, 0)?;
    let mut k = KBreakdown::assemble(angles, weights, estimates);
    if opts.check_samples_per_node > 0 {
        let check = KOptions { samples_per_node: opts.check_samples_per_node, ..opts.clone() };
        let coarse_budget = vec![check.samples_per_node; opts.nodes];
        let fine_budget = vec![check.samples_per_node; 2 * opts.nodes];
        let (a, w, e) = run_nodes(&check, opts.nodes, &coarse_budget, 0xc0a2_5e00)?;
        let coarse = KBreakdown::assemble(a, w, e).k_value;
        let (a, w, e) = run_nodes(&check, 2 * opts.nodes, &fine_budget, 0xc0a2_5e00)?;
        let fine = KBreakdown::assemble(a, w, e).k_value;
        let difference = fine.mean - coarse.mean;
        let difference_stderr = fine.stderr.hypot(coarse.stderr);
        k.quadrature_limited = difference.abs() > 3.0 * difference_stderr && difference.abs() > k.k_value.stderr;
        k.quadrature_check = Some(QuadratureCheck { coarse, fine, difference, difference_stderr });
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLimit {
    pub heights: Vec<f64>,
    pub estimates: Vec<MCEstimate>,
    /// `estimates[i+1] − estimates[i]`.
    pub increments: Vec<f64>,
    pub terminal: MCEstimate,
    /// The renewal limit, reported alongside and never substituted.
    pub renewal_limit: f64,
}

/// `u(y)` along an increasing schedule of heights (unit step radius).
pub fn k_by_limit(heights: &[f64], samples: u64, seed: u64, margin: f64) -> Result<KLimit> {
    if heights.is_empty() {
        return Err(Error::config("height schedule is empty"));
    }
    if heights.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Err(Error::config("heights must be positive"));
    }
    if heights.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("heights must be strictly increasing"));
    }
    let cfg = WalkConfig::new(1.0, seed, samples)?;
    let mut estimates = Vec::with_capacity(heights.len());
    for (i, &y) in heights.iter().enumerate() {
        let key = StreamKey::new(seed, 1).child(i as u64);
        estimates.push(exit_functional(y, &cfg, key, margin)?.estimate);
    }
    let increments = estimates.windows(2).map(|w| w[1].mean - w[0].mean).collect();
    Ok(KLimit {
        heights: heights.to_vec(),
        terminal: *estimates.last().expect("nonempty"),
        estimates,
        increments,
        renewal_limit: renewal_limit(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_closed_forms() {
        assert_eq!(integrand_weight(0.0), 0.0);
        assert!((integrand_weight(FRAC_PI_2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((constant_term() - 0.113_176_848).abs() < 1e-9);
    }

    #[test]
    fn renewal_limit_is_cutoff_stable() {
        let a = renewal_limit_with(1000.0);
        let b = renewal_limit_with(3000.0);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn assemble_propagates_errors() {
        let (a, w) = angular_rule(8);
        let e = vec![MCEstimate { mean: 0.3, stderr: 0.01, n: 10, censored: 0 }; 8];
        let k = KBreakdown::assemble(a.clone(), w.clone(), e);
        let expect: f64 = (0..8).map(|j| (8.0 / PI * w[j] * integrand_weight(a[j]) * 0.01).powi(2)).sum::<f64>().sqrt();
        assert!((k.k_value.stderr - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(k_by_quadrature(&KOptions::new(4, 100, 1)).is_err());
        assert!(k_by_limit(&[2.0, 1.0], 10, 1, 8.0).is_err());
        assert!(k_by_limit(&[], 10, 1, 8.0).is_err());
        let cfg = WalkConfig::new(1.0, 1, 10).unwrap();
        assert!(exit_functional(0.0, &cfg, cfg.key(), 8.0).is_err());
    }
}
