//! Correction-slope sweeps: `(∫g dω_h − ∫g dω)/h` over a list of step radii,
//! extrapolated to `h → 0` and compared with `K ∫ (g∘F) ρ dφ`.
//!
//! Two estimators of `∫g dω_h = E g(S̄_T)` are accumulated from the same
//! trajectories. The raw one averages `g(S̄_T)`. The controlled one averages
//! `g(S̄_T) − f(S_T) + f(0)`, where `f` is the harmonic extension of `g`.
//! Because every step's disk lies where `f` is harmonic, `f(S_n)` is a
//! martingale and `E f(S_T) = f(0)`, so both estimators have the same mean;
//! the controlled one only sees `f(S̄_T) − f(S_T) = O(h)` and its variance
//! is smaller by a factor of order `h²`.

use serde::Serialize;

use crate::density::{continuous_integral, sigma_d, BoundaryFn, HarmonicExtension};
use crate::domain::AnalyticDomain;
use crate::error::{Error, Result};
use crate::point::PlanePoint;
use crate::rng::StreamKey;
use crate::stats::{weighted_least_squares, MCEstimate, RunningStats};
use crate::walk::{check_censoring, domain_path, run_domain_exit, DomainExit, WalkConfig};

/// Grid used for the exact integral, the density and the harmonic extension.
const BOUNDARY_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteIntegral {
    pub raw: MCEstimate,
    pub controlled: MCEstimate,
    pub geometry_failures: u64,
    pub mean_steps: f64,
}

#[derive(Default)]
struct Accumulator {
    raw: RunningStats,
    controlled: RunningStats,
    failures: u64,
    steps: u64,
}

/// Monte Carlo estimate of `∫ g dω_h(0, ·; D)` with the walk started at 0.
pub fn discrete_integral(g: &BoundaryFn, dom: &AnalyticDomain, cfg: &WalkConfig, key: StreamKey) -> Result<DiscreteIntegral> {
    let ext = HarmonicExtension::new(g, dom, BOUNDARY_GRID);
    discrete_integral_with(g, &ext, dom, cfg, key)
}

fn discrete_integral_with(
    g: &BoundaryFn,
    ext: &HarmonicExtension,
    dom: &AnalyticDomain,
    cfg: &WalkConfig,
    key: StreamKey,
) -> Result<DiscreteIntegral> {
    let f0 = ext.at_origin();
    let parts = run_domain_exit(PlanePoint::ORIGIN, dom, cfg, key, Accumulator::default, |acc, rng| {
        match domain_path(rng, PlanePoint::ORIGIN, dom, cfg.h, cfg.max_steps, |_| {}) {
            DomainExit::Exited { point, steps } => {
                acc.steps += steps;
                let scored = dom.project_to_boundary(point).and_then(|p| Ok((g.eval(p.point), ext.eval(point, dom)?)));
                match scored {
                    Ok((gv, fv)) => {
                        acc.raw.push(gv);
                        acc.controlled.push(gv - fv + f0);
                    }
                    Err(_) => acc.failures += 1,
                }
            }
            DomainExit::Censored => {
                acc.steps += cfg.max_steps;
                acc.raw.push_censored();
                acc.controlled.push_censored();
            }
            DomainExit::GeometryFailure => acc.failures += 1,
        }
    })?;
    let mut total = Accumulator::default();
    for p in &parts {
        total.raw.merge(&p.raw);
        total.controlled.merge(&p.controlled);
        total.failures += p.failures;
        total.steps += p.steps;
    }
    let raw = total.raw.estimate();
    check_censoring(raw.censored + total.failures, cfg.samples)?;
    Ok(DiscreteIntegral {
        raw,
        controlled: total.controlled.estimate(),
        geometry_failures: total.failures,
        mean_steps: total.steps as f64 / cfg.samples as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    Raw,
    Controlled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub g: BoundaryFn,
    pub h_values: Vec<f64>,
    /// Trajectories per step radius.
    pub budget: u64,
    pub seed: u64,
    pub k_value: f64,
    pub estimator: Estimator,
    /// Fit a quadratic in `h` (needs at least four radii).
    pub quadratic: bool,
    /// Trajectories per radius for the feasibility pilot; 0 skips it.
    pub pilot: u64,
    /// Absolute part of the resolution requirement on `stderr/h`.
    pub abs_floor: f64,
    pub max_steps: u64,
}

impl SweepOptions {
    pub fn new(g: BoundaryFn, h_values: Vec<f64>, budget: u64, seed: u64) -> Self {
        SweepOptions {
            g,
            h_values,
            budget,
            seed,
            k_value: crate::halfplane::K_REFERENCE,
            estimator: Estimator::Controlled,
            quadratic: false,
            pilot: 20_000,
            abs_floor: 1e-4,
            max_steps: crate::walk::DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub h_values: Vec<f64>,
    /// Estimates of `∫g dω_h` with the configured estimator.
    pub mc_integrals: Vec<MCEstimate>,
    /// Raw-estimator values from the same trajectories, for reference.
    pub raw_integrals: Vec<MCEstimate>,
    pub exact_integral: f64,
    /// `(mc − exact)/h` with `stderr = mc.stderr/h`.
    pub ratios: Vec<MCEstimate>,
    pub extrapolated_slope: MCEstimate,
    pub predicted_slope: f64,
    pub estimator: Estimator,
    pub geometry_failures: u64,
}

fn pick(d: &DiscreteIntegral, e: Estimator) -> MCEstimate {
    match e {
        Estimator::Raw => d.raw,
        Estimator::Controlled => d.controlled,
    }
}

/// Runs the sweep. A pilot at each radius first projects the final
/// `stderr/h`; the run is refused when it cannot reach
/// `0.1·|predicted_slope| + abs_floor`.
pub fn correction_sweep(dom: &AnalyticDomain, opts: &SweepOptions) -> Result<SweepResult> {
    if opts.h_values.is_empty() {
        return Err(Error::config("no step radii given"));
    }
    for &h in &opts.h_values {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::config(format!("step radius must be positive, got {h}")));
        }
        if h > dom.reach() {
            return Err(Error::config(format!("step radius {h} exceeds the boundary reach {:.4}", dom.reach())));
        }
    }
    if opts.budget < 2 {
        return Err(Error::config("budget must be at least 2 trajectories per radius"));
    }
    let table = sigma_d(dom, opts.k_value, BOUNDARY_GRID)?;
    let predicted_slope = table.predicted_slope(&opts.g, dom);
    let exact_integral = continuous_integral(&opts.g, dom, BOUNDARY_GRID);
    let ext = HarmonicExtension::new(&opts.g, dom, BOUNDARY_GRID);
    let base = StreamKey::new(opts.seed, 2);

    if opts.pilot > 0 {
        let target = 0.1 * predicted_slope.abs() + opts.abs_floor;
        for (i, &h) in opts.h_values.iter().enumerate() {
            let cfg = WalkConfig::new(h, opts.seed, opts.pilot.min(opts.budget))?.with_max_steps(opts.max_steps)?;
            let pilot = discrete_integral_with(&opts.g, &ext, dom, &cfg, base.child(1000 + i as u64))?;
            let e = pick(&pilot, opts.estimator);
            let projected = e.stderr * (cfg.samples as f64 / opts.budget as f64).sqrt() / h;
            if projected > target {
                return Err(Error::BudgetInfeasible(format!(
                    "at h = {h} a budget of {} gives stderr/h ≈ {projected:.2e}, above the required {target:.2e}; \
                     about {:.1e} trajectories would be needed",
                    opts.budget,
                    opts.budget as f64 * (projected / target).powi(2)
                )));
            }
        }
    }

    let mut mc_integrals = Vec::new();
    let mut raw_integrals = Vec::new();
    let mut ratios = Vec::new();
    let mut geometry_failures = 0;
    for (i, &h) in opts.h_values.iter().enumerate() {
        let cfg = WalkConfig::new(h, opts.seed, opts.budget)?.with_max_steps(opts.max_steps)?;
        let d = discrete_integral_with(&opts.g, &ext, dom, &cfg, base.child(i as u64))?;
        geometry_failures += d.geometry_failures;
        let e = pick(&d, opts.estimator);
        ratios.push(MCEstimate { mean: (e.mean - exact_integral) / h, stderr: e.stderr / h, n: e.n, censored: e.censored });
        mc_integrals.push(e);
        raw_integrals.push(d.raw);
    }
    let extrapolated_slope = extrapolate(&opts.h_values, &ratios, opts.quadratic)?;
    Ok(SweepResult {
        h_values: opts.h_values.clone(),
        mc_integrals,
        raw_integrals,
        exact_integral,
        ratios,
        extrapolated_slope,
        predicted_slope,
        estimator: opts.estimator,
        geometry_failures,
    })
}

/// Intercept of the weighted fit of `ratio` against `h` (and `h²`).
pub fn extrapolate(h_values: &[f64], ratios: &[MCEstimate], quadratic: bool) -> Result<MCEstimate> {
    let n = h_values.len();
    let degree = if n == 1 {
        0
    } else if quadratic && n >= 4 {
        2
    } else {
        1
    };
    let rows: Vec<Vec<f64>> = h_values.iter().map(|&h| (0..=degree).map(|k| h.powi(k)).collect()).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r.mean).collect();
    let exact = ratios.iter().all(|r| r.stderr == 0.0);
    let w: Vec<f64> = ratios.iter().map(|r| if exact { 1.0 } else { 1.0 / r.stderr.max(1e-300).powi(2) }).collect();
    let fit = weighted_least_squares(&rows, &y, &w).ok_or_else(|| Error::config("step radii are too clustered to extrapolate"))?;
    let n_total = ratios.iter().map(|r| r.n).sum();
    let censored = ratios.iter().map(|r| r.censored).sum();
    let stderr = if exact { 0.0 } else { fit.stderrs[0] };
    Ok(MCEstimate { mean: fit.coeffs[0], stderr, n: n_total, censored })
}
