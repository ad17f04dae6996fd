//! Step sampling and trajectory drivers.
//!
//! Steps are uniform on the disk of radius `h`. Half-plane problems only see
//! the imaginary component, so they run a 1-D walk whose increments are the
//! imaginary parts of the same disk draws (semicircle law). Both samplers
//! consume exactly two 64-bit draws per step, so the 1-D walk and the
//! imaginary part of the 2-D walk coincide path by path on a shared stream.

use crate::domain::AnalyticDomain;
use crate::error::{Error, Result};
use crate::point::PlanePoint;
use crate::rng::{StreamKey, TrajectoryRng};

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;
/// Largest tolerated fraction of censored (or geometry-aborted) trajectories.
pub const CENSORING_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub h: f64,
    pub seed: u64,
    pub samples: u64,
    pub max_steps: u64,
}

impl WalkConfig {
    pub fn new(h: f64, seed: u64, samples: u64) -> Result<Self> {
        let cfg = WalkConfig { h, seed, samples, max_steps: DEFAULT_MAX_STEPS };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Result<Self> {
        self.max_steps = max_steps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_samples(mut self, samples: u64) -> Result<Self> {
        self.samples = samples;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::config(format!("step radius h must be positive and finite, got {}", self.h)));
        }
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        Ok(())
    }

    pub fn key(&self) -> StreamKey {
        StreamKey::new(self.seed, 0)
    }
}

/// Uniform draw from the open disk of radius `h`.
#[inline]
pub fn sample_step(rng: &mut TrajectoryRng, h: f64) -> PlanePoint {
    let (x, y) = rng.unit_disk();
    PlanePoint { re: h * x, im: h * y }
}

/// Imaginary part of a unit-disk step: semicircle law `(2/π)√(1−t²)` on `[−1, 1]`.
#[inline]
pub fn sample_im_increment(rng: &mut TrajectoryRng) -> f64 {
    let r = rng.uniform().sqrt();
    let (_, s) = crate::rng::cos_sin_bits(rng.next_u64());
    r * s
}

/// How a half-plane trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfPlaneOutcome {
    /// Left the upper half-plane; `overshoot = |Im S_T|`, in `[0, h]`.
    Exited { overshoot: f64, steps: u64 },
    /// Reached the closure level before exiting; `height` is the position there.
    Escaped { height: f64, steps: u64 },
    /// Hit the step cap.
    Censored,
}

/// 1-D projected walk from height `start` with step radius `h`, stopped at the
/// first non-positive height, at the first height `>= ceiling`, or after
/// `max_steps` steps. `ceiling = f64::INFINITY` disables the closure.
#[inline]
pub fn halfplane_path(rng: &mut TrajectoryRng, start: f64, h: f64, ceiling: f64, max_steps: u64) -> HalfPlaneOutcome {
    let mut y = start;
    if y <= 0.0 {
        return HalfPlaneOutcome::Exited { overshoot: -y, steps: 0 };
    }
    let mut n = 0u64;
    while n < max_steps {
        y += h * sample_im_increment(rng);
        n += 1;
        if y <= 0.0 {
            return HalfPlaneOutcome::Exited { overshoot: -y, steps: n };
        }
        if y >= ceiling {
            return HalfPlaneOutcome::Escaped { height: y, steps: n };
        }
    }
    HalfPlaneOutcome::Censored
}

/// Same stopping rule as [`halfplane_path`] but driving the full 2-D walk;
/// kept as an oracle for the 1-D reduction.
pub fn halfplane_path_2d(rng: &mut TrajectoryRng, start: f64, h: f64, ceiling: f64, max_steps: u64) -> HalfPlaneOutcome {
    let mut z = PlanePoint::new(0.0, start);
    if z.im <= 0.0 {
        return HalfPlaneOutcome::Exited { overshoot: -z.im, steps: 0 };
    }
    let mut n = 0u64;
    while n < max_steps {
        z = z + sample_step(rng, h);
        n += 1;
        if z.im <= 0.0 {
            return HalfPlaneOutcome::Exited { overshoot: -z.im, steps: n };
        }
        if z.im >= ceiling {
            return HalfPlaneOutcome::Escaped { height: z.im, steps: n };
        }
    }
    HalfPlaneOutcome::Censored
}

/// Runs `cfg.samples` half-plane trajectories from `start_height` and returns
/// their outcomes in trajectory order (deterministic for any thread count).
pub fn run_halfplane_exit(start_height: f64, cfg: &WalkConfig, key: StreamKey, ceiling: f64) -> Result<Vec<HalfPlaneOutcome>> {
    cfg.validate()?;
    if !(start_height > 0.0 && start_height.is_finite()) {
        return Err(Error::config(format!("start height must be positive, got {start_height}")));
    }
    let chunks = crate::parallel::run_tasks(cfg.samples, |task| {
        (task.start..task.end)
            .map(|i| {
                let mut rng = key.trajectory(task.task, i - task.start);
                halfplane_path(&mut rng, start_height, cfg.h, ceiling, cfg.max_steps)
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// How a domain trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainExit {
    /// First position outside `D`, and the number of steps taken.
    Exited {
        point: PlanePoint,
        steps: u64,
    },
    Censored,
    /// The inside test could not decide (Newton failure in the band).
    GeometryFailure,
}

/// Checks that `h` is admissible for walks in `domain` (collar projection
/// single-valued) and that `start` is inside.
pub fn check_domain_walk(start: PlanePoint, domain: &AnalyticDomain, h: f64) -> Result<()> {
    if h >= domain.reach() {
        return Err(Error::Geometry(format!(
            "step radius {h} is not below the boundary reach {:.4e}; exit projection would be ambiguous",
            domain.reach()
        )));
    }
    if !domain.inside(start)? {
        return Err(Error::Geometry(format!("start point ({}, {}) is not inside the domain", start.re, start.im)));
    }
    Ok(())
}

/// One trajectory of the 2-D walk from `start` until it leaves `domain`.
/// `visit` sees every pre-exit position `S_0, …, S_{T−1}`.
#[inline]
pub fn domain_path(
    rng: &mut TrajectoryRng,
    start: PlanePoint,
    domain: &AnalyticDomain,
    h: f64,
    max_steps: u64,
    mut visit: impl FnMut(PlanePoint),
) -> DomainExit {
    let safe = domain.inner_radius();
    let safe2 = safe * safe;
    let mut z = start;
    let mut n = 0u64;
    // A lower bound on the distance to the boundary lets the loop skip
    // membership tests for steps that cannot reach it.
    let mut free_steps = 0u64;
    loop {
        visit(z);
        if n >= max_steps {
            return DomainExit::Censored;
        }
        z = z + sample_step(rng, h);
        n += 1;
        if free_steps > 0 {
            free_steps -= 1;
            continue;
        }
        if z.norm_sqr() < safe2 {
            free_steps = ((safe - z.norm()) / h) as u64;
            continue;
        }
        match domain.inside(z) {
            Ok(true) => {
                free_steps = (domain.distance_lower_bound(z) / h) as u64;
            }
            Ok(false) => return DomainExit::Exited { point: z, steps: n },
            Err(_) => return DomainExit::GeometryFailure,
        }
    }
}

/// Runs `cfg.samples` domain trajectories from `start`. Each task builds an
/// accumulator with `init`, feeds it every trajectory through `record`
/// (which receives the visit positions through its own closure state), and
/// the per-task accumulators are returned in task order.
pub fn run_domain_exit<A, I, R>(
    start: PlanePoint,
    domain: &AnalyticDomain,
    cfg: &WalkConfig,
    key: StreamKey,
    init: I,
    record: R,
) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    R: Fn(&mut A, &mut TrajectoryRng) + Sync,
{
    cfg.validate()?;
    check_domain_walk(start, domain, cfg.h)?;
    Ok(crate::parallel::run_tasks(cfg.samples, |task| {
        let mut acc = init();
        for i in task.start..task.end {
            let mut rng = key.trajectory(task.task, i - task.start);
            record(&mut acc, &mut rng);
        }
        acc
    }))
}

/// Collects raw exit points; a convenience over [`run_domain_exit`].
pub fn collect_exit_points(start: PlanePoint, domain: &AnalyticDomain, cfg: &WalkConfig, key: StreamKey) -> Result<Vec<DomainExit>> {
    let chunks = run_domain_exit(start, domain, cfg, key, Vec::new, |acc: &mut Vec<DomainExit>, rng| {
        acc.push(domain_path(rng, start, domain, cfg.h, cfg.max_steps, |_| {}));
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Fails when censored plus aborted trajectories exceed [`CENSORING_LIMIT`].
pub fn check_censoring(censored: u64, total: u64) -> Result<()> {
    if total > 0 && censored as f64 > CENSORING_LIMIT * total as f64 {
        return Err(Error::Censored { censored, total, limit: CENSORING_LIMIT });
    }
    Ok(())
}
