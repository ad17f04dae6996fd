//! Occupation-density estimate of the killed walk's Green's function and its
//! comparison with `8·G_D`.
//!
//! Every pre-exit position `S_0, …, S_{T−1}` is binned on a square grid
//! whose cells are centred at integer multiples of the bin width. With `N`
//! trajectories, `Ĝ_h(bin) = visits/(N·area)` and the compared quantity is
//! `h²·Ĝ_h`. Error bars come from batch means over the fixed task partition.
//!
//! Near the boundary the same run also bins visits by their collar
//! coordinates `(t, l)`, `z = F(e^{it}) + l·n`, and compares the excess
//! `h²Ĝ_h − 8G_D` with `8·H_D(0, x)·h·u(l/h)`, where `u(y)` is the mean
//! overshoot of a unit-step walk started at height `y` above a line.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::domain::AnalyticDomain;
use crate::error::{Error, Result};
use crate::halfplane::{exit_functional, DEFAULT_FAR_MARGIN};
use crate::point::PlanePoint;
use crate::quadrature::GaussRule;
use crate::rng::StreamKey;
use crate::stats::{MCEstimate, RunningStats};
use crate::walk::{check_censoring, domain_path, run_domain_exit, DomainExit, WalkConfig};

/// Bins with fewer visits are flagged as sparse.
pub const SPARSE_VISITS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreensOptions {
    pub h: f64,
    pub budget: u64,
    pub bin_width: f64,
    pub seed: u64,
    /// Extra exclusion radius around the pole, on top of `√h`.
    pub min_radius: f64,
    /// Angular sectors of the collar check; 0 disables it.
    pub collar_sectors: usize,
    /// Trajectories per node for the overshoot function `u`.
    pub collar_u_samples: u64,
    pub max_steps: u64,
}

impl GreensOptions {
    pub fn new(h: f64, budget: u64, bin_width: f64, seed: u64) -> Self {
        GreensOptions {
            h,
            budget,
            bin_width,
            seed,
            min_radius: 0.0,
            collar_sectors: 1,
            collar_u_samples: 200_000,
            max_steps: crate::walk::DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensBin {
    pub center: PlanePoint,
    pub area: f64,
    pub visits: u64,
    /// `h²·Ĝ_h`.
    pub gh_scaled: f64,
    pub gh_stderr: f64,
    /// Cell average of `8·G_D` (NaN for bins that are not admissible).
    pub gd8: f64,
    pub diff: f64,
    /// Cell inside `D` and clear of the pole.
    pub admissible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarSector {
    pub t_lo: f64,
    pub t_hi: f64,
    pub area: f64,
    pub visits: u64,
    pub gh_scaled: f64,
    pub gh_stderr: f64,
    /// Area average of `8·G_D` over the sector.
    pub gd8: f64,
    /// `gh_scaled − gd8`.
    pub measured_excess: f64,
    /// Area average of `8·H_D·h·u(l/h)`.
    pub predicted_excess: f64,
    pub predicted_stderr: f64,
    pub relative_error: f64,
}

/// Occupation identity: binned visits per trajectory equal `T`, and by
/// optional stopping `E T = 2E|S_T|²/h²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCheck {
    /// `Σ Ĝ_h·area` over all bins.
    pub occupation: f64,
    pub mean_steps: f64,
    /// Mean of `visits − 2|S_T|²/h²` per trajectory; zero in expectation.
    pub difference: MCEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreensGrid {
    pub h: f64,
    pub bin_width: f64,
    pub samples: u64,
    pub bins: Vec<GreensBin>,
    pub sup_diff: f64,
    /// Index into `bins` of the maximiser.
    pub sup_bin: Option<usize>,
    pub admissible_bins: usize,
    /// Admissible bins with fewer than [`SPARSE_VISITS`] visits.
    pub sparse_bins: usize,
    /// Collar band `[l_lo, l_hi)` used for the near-boundary check.
    pub collar_band: (f64, f64),
    pub collar: Vec<CollarSector>,
    pub mass: MassCheck,
    pub geometry_failures: u64,
}

struct Grid {
    half: i64,
    side: usize,
    width: f64,
}

impl Grid {
    fn new(dom: &AnalyticDomain, width: f64) -> Self {
        let half = (dom.outer_radius() / width).ceil() as i64 + 1;
        Grid { half, side: (2 * half + 1) as usize, width }
    }

    #[inline]
    fn index(&self, z: PlanePoint) -> Option<usize> {
        let i = (z.re / self.width).round() as i64 + self.half;
        let j = (z.im / self.width).round() as i64 + self.half;
        let side = self.side as i64;
        (i >= 0 && j >= 0 && i < side && j < side).then(|| (j * side + i) as usize)
    }

    fn center(&self, idx: usize) -> PlanePoint {
        let i = (idx % self.side) as i64 - self.half;
        let j = (idx / self.side) as i64 - self.half;
        PlanePoint::new(i as f64 * self.width, j as f64 * self.width)
    }

    fn len(&self) -> usize {
        self.side * self.side
    }
}

struct Collar {
    lo: f64,
    hi: f64,
    sectors: usize,
    /// Points closer to the origin than this cannot be in the collar.
    skip_radius2: f64,
}

impl Collar {
    #[inline]
    fn sector(&self, z: PlanePoint, dom: &AnalyticDomain) -> Option<usize> {
        if self.sectors == 0 || z.norm_sqr() < self.skip_radius2 || dom.distance_lower_bound(z) >= self.hi {
            return None;
        }
        let p = dom.project_to_boundary(z).ok()?;
        if p.l < self.lo || p.l >= self.hi {
            return None;
        }
        Some(((p.t / TAU * self.sectors as f64) as usize).min(self.sectors - 1))
    }
}

struct TaskTally {
    visits: Vec<u64>,
    collar: Vec<u64>,
    mass: RunningStats,
    steps: u64,
    failures: u64,
}

/// Runs the occupation estimate and both comparisons.
pub fn greens_compare(dom: &AnalyticDomain, opts: &GreensOptions) -> Result<GreensGrid> {
    let h = opts.h;
    if !(opts.bin_width >= 2.0 * h) {
        return Err(Error::config(format!("bin width {} must be at least 2h = {}", opts.bin_width, 2.0 * h)));
    }
    if opts.budget < 2 {
        return Err(Error::config("budget must be at least 2 trajectories"));
    }
    let cfg = WalkConfig::new(h, opts.seed, opts.budget)?.with_max_steps(opts.max_steps)?;
    let grid = Grid::new(dom, opts.bin_width);
    let (lo, hi) = (0.375 * h, 0.625 * h);
    let inner = (dom.inner_radius() - hi).max(0.0);
    let collar = Collar { lo, hi, sectors: opts.collar_sectors, skip_radius2: inner * inner };
    let key = StreamKey::new(opts.seed, 4);
    let two_over_h2 = 2.0 / (h * h);

    let tallies = run_domain_exit(
        PlanePoint::ORIGIN,
        dom,
        &cfg,
        key,
        || TaskTally {
            visits: vec![0; grid.len()],
            collar: vec![0; opts.collar_sectors],
            mass: RunningStats::new(),
            steps: 0,
            failures: 0,
        },
        |tally, rng| {
            let mut binned = 0u64;
            let TaskTally { visits, collar: collar_visits, .. } = tally;
            let exit = domain_path(rng, PlanePoint::ORIGIN, dom, h, cfg.max_steps, |z| {
                if let Some(i) = grid.index(z) {
                    visits[i] += 1;
                    binned += 1;
                }
                if let Some(s) = collar.sector(z, dom) {
                    collar_visits[s] += 1;
                }
            });
            match exit {
                DomainExit::Exited { point, steps } => {
                    tally.steps += steps;
                    tally.mass.push(binned as f64 - two_over_h2 * point.norm_sqr());
                }
                DomainExit::Censored => tally.mass.push_censored(),
                DomainExit::GeometryFailure => tally.failures += 1,
            }
        },
    )?;

    let n = opts.budget as f64;
    let geometry_failures: u64 = tallies.iter().map(|t| t.failures).sum();
    let mut mass = RunningStats::new();
    for t in &tallies {
        mass.merge(&t.mass);
    }
    let mass_estimate = mass.estimate();
    check_censoring(mass_estimate.censored + geometry_failures, opts.budget)?;
    let task_sizes: Vec<f64> = crate::parallel::partition(opts.budget).iter().map(|r| r.len() as f64).collect();

    let area = opts.bin_width * opts.bin_width;
    let exclusion = h.sqrt().max(opts.min_radius);
    let cell_rule = GaussRule::new(4, -0.5 * opts.bin_width, 0.5 * opts.bin_width);
    let mut bins = Vec::new();
    let mut total_visits = 0u64;
    for idx in 0..grid.len() {
        let per_task: Vec<u64> = tallies.iter().map(|t| t.visits[idx]).collect();
        let visits: u64 = per_task.iter().sum();
        total_visits += visits;
        let center = grid.center(idx);
        let admissible = cell_admissible(dom, center, opts.bin_width, exclusion)?;
        if visits == 0 && !admissible {
            continue;
        }
        let scale = h * h / area;
        let gh_scaled = scale * visits as f64 / n;
        let gh_stderr = scale * batch_stderr(&per_task, &task_sizes);
        let gd8 = if admissible { 8.0 * cell_average(dom, center, &cell_rule)? } else { f64::NAN };
        bins.push(GreensBin { center, area, visits, gh_scaled, gh_stderr, gd8, diff: gh_scaled - gd8, admissible });
    }
    let mut sup_bin = None;
    let mut sup_diff = 0.0;
    for (i, b) in bins.iter().enumerate() {
        if b.admissible && b.diff.abs() >= sup_diff {
            sup_diff = b.diff.abs();
            sup_bin = Some(i);
        }
    }
    let admissible_bins = bins.iter().filter(|b| b.admissible).count();
    let sparse_bins = bins.iter().filter(|b| b.admissible && b.visits < SPARSE_VISITS).count();

    let collar_sectors = if opts.collar_sectors > 0 {
        let per_sector: Vec<Vec<u64>> = (0..opts.collar_sectors).map(|s| tallies.iter().map(|t| t.collar[s]).collect()).collect();
        collar_check(dom, opts, (lo, hi), &per_sector, &task_sizes)?
    } else {
        Vec::new()
    };

    Ok(GreensGrid {
        h,
        bin_width: opts.bin_width,
        samples: opts.budget,
        bins,
        sup_diff,
        sup_bin,
        admissible_bins,
        sparse_bins,
        collar_band: (lo, hi),
        collar: collar_sectors,
        mass: MassCheck {
            occupation: total_visits as f64 / n,
            mean_steps: tallies.iter().map(|t| t.steps).sum::<u64>() as f64 / n,
            difference: mass_estimate,
        },
        geometry_failures,
    })
}

/// Standard error of `Σv/Σn` from per-task totals (batch means).
fn batch_stderr(values: &[u64], sizes: &[f64]) -> f64 {
    let total: f64 = sizes.iter().sum();
    let b = values.len();
    let sum: f64 = values.iter().map(|&v| v as f64).sum();
    if b < 2 {
        return sum.sqrt() / total;
    }
    let ratio = sum / total;
    let ss: f64 = values.iter().zip(sizes).map(|(&v, &s)| (v as f64 - ratio * s).powi(2)).sum();
    (ss * b as f64 / (b - 1) as f64).sqrt() / total
}

fn cell_admissible(dom: &AnalyticDomain, center: PlanePoint, width: f64, exclusion: f64) -> Result<bool> {
    let half = 0.5 * width;
    let nearest = PlanePoint::new((center.re.abs() - half).max(0.0), (center.im.abs() - half).max(0.0));
    if nearest.norm() <= exclusion {
        return Ok(false);
    }
    for a in [-half, 0.0, half] {
        for b in [-half, 0.0, half] {
            if !dom.inside(center + PlanePoint::new(a, b))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn cell_average(dom: &AnalyticDomain, center: PlanePoint, rule: &GaussRule) -> Result<f64> {
    let mut total = 0.0;
    let mut weight = 0.0;
    for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
        for (&y, &wy) in rule.nodes.iter().zip(&rule.weights) {
            total += wx * wy * dom.greens_gd(center + PlanePoint::new(x, y))?;
            weight += wx * wy;
        }
    }
    Ok(total / weight)
}

fn collar_check(
    dom: &AnalyticDomain,
    opts: &GreensOptions,
    (lo, hi): (f64, f64),
    per_sector: &[Vec<u64>],
    task_sizes: &[f64],
) -> Result<Vec<CollarSector>> {
    let h = opts.h;
    let l_rule = GaussRule::new(3, lo, hi);
    // Overshoot function at the l-nodes, unit step radius.
    let mut u = Vec::new();
    for (k, &l) in l_rule.nodes.iter().enumerate() {
        let cfg = WalkConfig::new(1.0, opts.seed, opts.collar_u_samples)?;
        let key = StreamKey::new(opts.seed, 5).child(k as u64);
        u.push(exit_functional(l / h, &cfg, key, DEFAULT_FAR_MARGIN)?.estimate);
    }
    let sectors = per_sector.len();
    let n = opts.budget as f64;
    let mut out = Vec::with_capacity(sectors);
    for (s, counts) in per_sector.iter().enumerate() {
        let t_lo = TAU * s as f64 / sectors as f64;
        let t_hi = TAU * (s + 1) as f64 / sectors as f64;
        let t_rule = GaussRule::new(16, t_lo, t_hi);
        let (mut area, mut gd, mut pred) = (0.0, 0.0, 0.0);
        let mut pred_var = vec![0.0; u.len()];
        for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
            let x = dom.boundary_point(t);
            let normal = dom.inward_normal(t);
            let speed = dom.speed(t);
            let kappa = dom.curvature(t);
            let hd = dom.poisson_hd(t);
            for (k, (&l, &wl)) in l_rule.nodes.iter().zip(&l_rule.weights).enumerate() {
                let jac = wt * wl * speed * (1.0 - kappa * l);
                area += jac;
                gd += jac * 8.0 * dom.greens_gd(x + normal * l)?;
                pred += jac * 8.0 * hd * h * u[k].mean;
                pred_var[k] += jac * 8.0 * hd * h;
            }
        }
        let visits: u64 = counts.iter().sum();
        let scale = h * h / area;
        let gh_scaled = scale * visits as f64 / n;
        let gh_stderr = scale * batch_stderr(counts, task_sizes);
        let gd8 = gd / area;
        let predicted_excess = pred / area;
        let predicted_stderr = pred_var.iter().zip(&u).map(|(c, e)| (c / area * e.stderr).powi(2)).sum::<f64>().sqrt();
        let measured_excess = gh_scaled - gd8;
        out.push(CollarSector {
            t_lo,
            t_hi,
            area,
            visits,
            gh_scaled,
            gh_stderr,
            gd8,
            measured_excess,
            predicted_excess,
            predicted_stderr,
            relative_error: (measured_excess - predicted_excess) / predicted_excess,
        });
    }
    Ok(out)
}
