//! Discrete Laplacian of a harmonic function near the boundary, with the
//! function extended outside `D` by its value at the nearest boundary point.
//!
//! At `z = x + l·n` the average `(1/πh²)∫_{B(z,h)}[f̃(z+ξ) − f(z)]dξ` only
//! picks up the part of the disk outside `D`: every circle `|ξ| = r` has
//! mean `f(z)` because `f` is harmonic on the whole plane, so
//!
//! `Δ_h f(z) = (1/πh²) ∫_l^h r ∫_{arc outside D} [f(P̄) − f(P)] dθ dr`.
//!
//! Circles with `r < l` lie inside and contribute nothing. The outside arc
//! grows like `√(r − l)`, which the substitution `r = l + (h − l)s²` absorbs.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::domain::AnalyticDomain;
use crate::error::{Error, Result};
use crate::point::PlanePoint;
use crate::quadrature::GaussRule;

/// Entire harmonic test functions with closed-form values and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HarmonicTest {
    /// `Re z²`
    Re2,
    /// `Re z³`
    Re3,
}

impl HarmonicTest {
    pub fn eval(self, z: PlanePoint) -> f64 {
        let (x, y) = (z.re, z.im);
        match self {
            HarmonicTest::Re2 => x * x - y * y,
            HarmonicTest::Re3 => x * x * x - 3.0 * x * y * y,
        }
    }

    pub fn gradient(self, z: PlanePoint) -> PlanePoint {
        let (x, y) = (z.re, z.im);
        match self {
            HarmonicTest::Re2 => PlanePoint::new(2.0 * x, -2.0 * y),
            HarmonicTest::Re3 => PlanePoint::new(3.0 * (x * x - y * y), -6.0 * x * y),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "re2" => Ok(HarmonicTest::Re2),
            "re3" => Ok(HarmonicTest::Re3),
            other => Err(Error::config(format!("unknown harmonic test function '{other}' (expected re2 or re3)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HarmonicTest::Re2 => "re2",
            HarmonicTest::Re3 => "re3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryLayerValue {
    pub h: f64,
    pub l: f64,
    /// Boundary parameter of `x`.
    pub t: f64,
    pub numeric: f64,
    pub formula: f64,
    pub diff: f64,
    /// Inward normal derivative of `f` at `x`.
    pub normal_derivative: f64,
}

/// The bracket `(2/3)h²√(h²−l²) + (l²/3)√(h²−l²) − l·h²·arccos(l/h)`.
pub fn layer_bracket(l: f64, h: f64) -> f64 {
    let root = (h * h - l * l).max(0.0).sqrt();
    let c = (l / h).clamp(-1.0, 1.0).acos();
    2.0 / 3.0 * h * h * root + l * l / 3.0 * root - l * h * h * c
}

const RADIAL_POINTS: usize = 32;
const ANGULAR_POINTS: usize = 32;
/// Relative agreement required between the base and refined rules.
const QUAD_TOL: f64 = 1e-9;

/// Numeric and formula values of `Δ_h f` at `F(e^{it}) + l·n`.
pub fn boundary_layer_laplacian(dom: &AnalyticDomain, f: HarmonicTest, t: f64, l: f64, h: f64) -> Result<BoundaryLayerValue> {
    if !(h > 0.0 && h < dom.reach()) {
        return Err(Error::config(format!("h = {h} must lie in (0, reach = {:.4})", dom.reach())));
    }
    if !(0.0..=h).contains(&l) {
        return Err(Error::config(format!("l = {l} must lie in [0, h]")));
    }
    let x = dom.boundary_point(t);
    let n = dom.inward_normal(t);
    let grad = f.gradient(x);
    let normal_derivative = grad.re * n.re + grad.im * n.im;
    let formula = normal_derivative * layer_bracket(l, h) / (PI * h * h);

    let z = x + n * l;
    let coarse = outside_integral(dom, f, z, n, l, h, RADIAL_POINTS, ANGULAR_POINTS)?;
    let fine = outside_integral(dom, f, z, n, l, h, RADIAL_POINTS + 16, ANGULAR_POINTS + 16)?;
    let scale = formula.abs().max(fine.abs()).max(h * h * grad.norm());
    if (fine - coarse).abs() > QUAD_TOL * scale {
        return Err(Error::Quadrature(format!(
            "boundary-layer quadrature at t = {t}, l = {l}, h = {h} changed by {:.3e} under refinement",
            (fine - coarse).abs()
        )));
    }
    Ok(BoundaryLayerValue { h, l, t, numeric: fine, formula, diff: fine - formula, normal_derivative })
}

#[allow(clippy::too_many_arguments)]
fn outside_integral(
    dom: &AnalyticDomain,
    f: HarmonicTest,
    z: PlanePoint,
    n: PlanePoint,
    l: f64,
    h: f64,
    radial: usize,
    angular: usize,
) -> Result<f64> {
    if l >= h {
        return Ok(0.0);
    }
    let centre = (-n.im).atan2(-n.re);
    let s_rule = GaussRule::new(radial, 0.0, 1.0);
    let mut total = 0.0;
    for (&s, &ws) in s_rule.nodes.iter().zip(&s_rule.weights) {
        let r = l + (h - l) * s * s;
        let dr = 2.0 * (h - l) * s;
        let at = |theta: f64| z + PlanePoint::new(theta.cos(), theta.sin()) * r;
        if dom.inside(at(centre))? {
            continue;
        }
        let lo = arc_end(dom, &at, centre, -1.0)?;
        let hi = arc_end(dom, &at, centre, 1.0)?;
        let th_rule = GaussRule::new(angular, lo, hi);
        let mut arc = 0.0;
        for (&th, &wt) in th_rule.nodes.iter().zip(&th_rule.weights) {
            let p = at(th);
            let proj = dom.project_to_boundary(p)?;
            arc += wt * (f.eval(proj.point) - f.eval(p));
        }
        total += ws * dr * r * arc;
    }
    Ok(total / (PI * h * h))
}

/// Angle where the circle re-enters `D`, searching from the outside point
/// at `centre` in direction `dir`.
fn arc_end(dom: &AnalyticDomain, at: &impl Fn(f64) -> PlanePoint, centre: f64, dir: f64) -> Result<f64> {
    let step = PI / 64.0;
    let mut outside = centre;
    let mut inside = None;
    for k in 1..=64 {
        let th = centre + dir * step * k as f64;
        if dom.inside(at(th))? {
            inside = Some(th);
            break;
        }
        outside = th;
    }
    let Some(mut inside) = inside else {
        return Err(Error::Geometry("boundary-layer circle lies entirely outside the domain".into()));
    };
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if dom.inside(at(mid))? {
            inside = mid;
        } else {
            outside = mid;
        }
        if (inside - outside).abs() < 1e-15 * FRAC_PI_2 {
            break;
        }
    }
    Ok(0.5 * (inside + outside))
}
