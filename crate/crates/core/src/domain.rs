//! Analytic Jordan domains given as images of the unit disk.
//!
//! A domain is `D = F(𝔻)` for a polynomial `F(w) = c₁w + c₂w² + … + c_m w^m`
//! with `F(0) = 0`, `F′ ≠ 0` on the closed disk and `F` injective there. The
//! inverse map `ψ = F⁻¹ : D → 𝔻` is evaluated by Newton iteration.
//!
//! Everything the random walk and the density formulas need is derived from
//! `F` and its first three derivatives: the inside test, the nearest-point
//! projection onto `∂D`, the boundary modulus `m(t) = 1/|F′(e^{it})|`, the
//! Green's function `G_D(0, z) = -ln|ψ(z)| / 2π` and the Poisson kernel
//! `H_D(0, F(e^{it})) = m(t) / 2π`.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::PlanePoint;

const BOUNDARY_SAMPLES: usize = 4096;
const INJECTIVITY_SAMPLES: usize = 512;
const GRID_CELLS: usize = 256;
const REACH_SAFETY: f64 = 4.0;
const NEWTON_MAX_ITER: usize = 60;

/// Which layer of the inside test produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsideLayer {
    InscribedDisk,
    BoundingDisk,
    Grid,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellClass {
    Inside,
    Outside,
    Band,
}

/// Nearest boundary point of a point in the collar of `∂D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryProjection {
    pub point: PlanePoint,
    /// Signed distance, positive inside `D`.
    pub l: f64,
    /// Inward unit normal at `point`.
    pub normal: PlanePoint,
    /// Boundary parameter, `point = F(e^{it})`, reduced to `[0, 2π)`.
    pub t: f64,
}

/// `m(t)` and its first two derivatives in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryModulus {
    pub m: f64,
    pub dm: f64,
    pub d2m: f64,
}

/// Serialised form used by configuration files: `{"coeffs": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub coeffs: Vec<(f64, f64)>,
}

struct CellGrid {
    lo: f64,
    cell: f64,
    n: usize,
    class: Vec<CellClass>,
    /// Nearest boundary sample for cells within the seeding radius, else `u32::MAX`.
    seed: Vec<u32>,
    /// Lower bound on the distance from any point of the cell to `∂D`.
    min_dist: Vec<f32>,
}

pub struct AnalyticDomain {
    coeffs: Vec<Complex64>,
    boundary: Vec<Complex64>,
    reach: f64,
    inner_radius: f64,
    outer_radius: f64,
    diameter: f64,
    grid: CellGrid,
}

impl fmt::Debug for AnalyticDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticDomain")
            .field("coeffs", &self.coeffs)
            .field("reach", &self.reach)
            .field("inner_radius", &self.inner_radius)
            .field("outer_radius", &self.outer_radius)
            .finish()
    }
}

impl AnalyticDomain {
    /// Builds and certifies the domain `F(𝔻)` for `F(w) = Σ coeffs[k-1]·w^k`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let mut coeffs = coeffs;
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::config("domain coefficients must be finite"));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if coeffs.is_empty() || coeffs[0].norm() <= 1e-12 * scale || scale == 0.0 {
            return Err(Error::config("leading coefficient c1 must be nonzero"));
        }

        let partial = PartialDomain { coeffs: &coeffs };
        let samples: Vec<(Complex64, Complex64, Complex64)> = (0..BOUNDARY_SAMPLES)
            .map(|k| {
                let t = TAU * k as f64 / BOUNDARY_SAMPLES as f64;
                partial.curve(t)
            })
            .collect();

        // F' has no zeros in the closed disk: nonvanishing on the circle and
        // zero winding number around the origin.
        let derivs: Vec<Complex64> = (0..BOUNDARY_SAMPLES)
            .map(|k| partial.eval_d1(Complex64::from_polar(1.0, TAU * k as f64 / BOUNDARY_SAMPLES as f64)).1)
            .collect();
        let min_fp = derivs.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        if min_fp <= 1e-9 * scale {
            return Err(Error::Geometry("F' vanishes on the unit circle".into()));
        }
        let winding: f64 = (0..BOUNDARY_SAMPLES).map(|k| (derivs[(k + 1) % BOUNDARY_SAMPLES] / derivs[k]).arg()).sum::<f64>() / TAU;
        if winding.round() != 0.0 {
            return Err(Error::Geometry(format!("F' has {} zero(s) inside the unit disk", winding.round())));
        }

        // Injectivity certificate on a coarser grid.
        let mut min_ratio = f64::INFINITY;
        let mut diameter: f64 = 0.0;
        let coarse: Vec<(Complex64, Complex64)> = (0..INJECTIVITY_SAMPLES)
            .map(|k| {
                let e = Complex64::from_polar(1.0, TAU * k as f64 / INJECTIVITY_SAMPLES as f64);
                (e, partial.eval(e))
            })
            .collect();
        for i in 0..INJECTIVITY_SAMPLES {
            for j in (i + 1)..INJECTIVITY_SAMPLES {
                let dz = (coarse[i].1 - coarse[j].1).norm();
                diameter = diameter.max(dz);
                min_ratio = min_ratio.min(dz / (coarse[i].0 - coarse[j].0).norm());
            }
        }
        if min_ratio <= 1e-6 * scale {
            return Err(Error::Geometry(format!("F is not injective on the closed disk (min chord ratio {min_ratio:e})")));
        }

        let boundary: Vec<Complex64> = samples.iter().map(|s| s.0).collect();
        let curvature: Vec<f64> = samples.iter().map(|&(_, d1, d2)| (d1.conj() * d2).im / d1.norm().powi(3)).collect();
        let max_kappa = curvature.iter().map(|k| k.abs()).fold(0.0, f64::max);
        let reach = if max_kappa > 0.0 { 1.0 / max_kappa / REACH_SAFETY } else { f64::INFINITY };
        if !(reach > 0.0) {
            return Err(Error::Geometry("non-positive reach".into()));
        }
        let max_seg = (0..BOUNDARY_SAMPLES).map(|k| (boundary[(k + 1) % BOUNDARY_SAMPLES] - boundary[k]).norm()).fold(0.0, f64::max);
        let sagitta = 2.0 * max_kappa * max_seg * max_seg / 8.0 + 1e-12 * scale;

        let inner_radius = (0..BOUNDARY_SAMPLES)
            .map(|k| segment_distance(Complex64::new(0.0, 0.0), boundary[k], boundary[(k + 1) % BOUNDARY_SAMPLES]))
            .fold(f64::INFINITY, f64::min)
            - sagitta;
        if inner_radius <= 0.0 {
            return Err(Error::Geometry("the origin is not strictly inside the domain".into()));
        }
        let outer_radius = boundary.iter().map(|z| z.norm()).fold(0.0, f64::max) + sagitta;

        let grid = CellGrid::build(&boundary, outer_radius, reach, max_seg, sagitta);
        Ok(AnalyticDomain { coeffs, boundary, reach, inner_radius, outer_radius, diameter, grid })
    }

    pub fn unit_disk() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0)]).expect("unit disk is valid")
    }

    pub fn scaled_disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(format!("disk radius must be positive, got {radius}")));
        }
        Self::new(vec![Complex64::new(radius, 0.0)])
    }

    /// `F(w) = w + c·w²`, restricted to `|c| ≤ 0.3`.
    pub fn cardioid(c: f64) -> Result<Self> {
        if !(c.abs() <= 0.3) {
            return Err(Error::config(format!("cardioid parameter must satisfy |c| <= 0.3, got {c}")));
        }
        Self::new(vec![Complex64::new(1.0, 0.0), Complex64::new(c, 0.0)])
    }

    /// A three-coefficient map with no reflection symmetry.
    pub fn asymmetric() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.15, 0.1), Complex64::new(-0.06, 0.04)])
            .expect("built-in asymmetric domain is valid")
    }

    /// The built-in family: unit disk, disk of radius 2, `w + 0.2w²` and the
    /// asymmetric cubic.
    pub fn builtins() -> Vec<(&'static str, AnalyticDomain)> {
        vec![
            ("disk", Self::unit_disk()),
            ("scaled:2", Self::scaled_disk(2.0).expect("valid")),
            ("cardioid:0.2", Self::cardioid(0.2).expect("valid")),
            ("asym3", Self::asymmetric()),
        ]
    }

    /// Parses `disk`, `scaled:R`, `cardioid:c`, `asym3` or a comma-separated
    /// coefficient list such as `1,0.2` or `1,0.15+0.1i,-0.06+0.04i`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if s == "disk" {
            return Ok(Self::unit_disk());
        }
        if s == "asym3" {
            return Ok(Self::asymmetric());
        }
        if let Some(r) = s.strip_prefix("scaled:") {
            return Self::scaled_disk(parse_real(r)?);
        }
        if let Some(c) = s.strip_prefix("cardioid:") {
            return Self::cardioid(parse_real(c)?);
        }
        let coeffs = s.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        Self::new(spec.coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec { coeffs: self.coeffs.iter().map(|c| (c.re, c.im)).collect() }
    }

    /// Canonical textual form, accepted by [`AnalyticDomain::parse`].
    pub fn describe(&self) -> String {
        self.coeffs.iter().map(|c| format_complex(*c)).collect::<Vec<_>>().join(",")
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Whether the map is `w ↦ c₁w`, i.e. a disk centred at the origin.
    pub fn is_centered_disk(&self) -> bool {
        self.coeffs.len() == 1
    }

    #[inline]
    pub fn eval(&self, w: Complex64) -> Complex64 {
        PartialDomain { coeffs: &self.coeffs }.eval(w)
    }

    /// `(F(w), F′(w))`.
    #[inline]
    pub fn eval_d1(&self, w: Complex64) -> (Complex64, Complex64) {
        PartialDomain { coeffs: &self.coeffs }.eval_d1(w)
    }

    /// `(F, F′, F″, F‴)` at `w`.
    pub fn eval_d3(&self, w: Complex64) -> [Complex64; 4] {
        PartialDomain { coeffs: &self.coeffs }.eval_d3(w)
    }

    /// Boundary point `F(e^{it})`.
    pub fn boundary_point(&self, t: f64) -> PlanePoint {
        self.eval(Complex64::from_polar(1.0, t)).into()
    }

    /// Inward unit normal at `F(e^{it})`.
    pub fn inward_normal(&self, t: f64) -> PlanePoint {
        let (_, d1, _) = PartialDomain { coeffs: &self.coeffs }.curve(t);
        let tangent = d1 / d1.norm();
        (Complex64::i() * tangent).into()
    }

    /// Whether `z ∈ D`, with the layer that decided.
    pub fn inside_with_layer(&self, z: PlanePoint) -> Result<(bool, InsideLayer)> {
        let r2 = z.norm_sqr();
        if r2 < self.inner_radius * self.inner_radius {
            return Ok((true, InsideLayer::InscribedDisk));
        }
        if r2 > self.outer_radius * self.outer_radius {
            return Ok((false, InsideLayer::BoundingDisk));
        }
        let Some(idx) = self.grid.index(z) else {
            return Ok((false, InsideLayer::BoundingDisk));
        };
        match self.grid.class[idx] {
            CellClass::Inside => Ok((true, InsideLayer::Grid)),
            CellClass::Outside => Ok((false, InsideLayer::Grid)),
            CellClass::Band => {
                let w = self.invert_seeded(z.to_complex(), self.grid.seed[idx])?;
                Ok((w.norm() < 1.0, InsideLayer::Newton))
            }
        }
    }

    /// Layered membership test; see [`AnalyticDomain::inside_with_layer`].
    #[inline]
    pub fn inside(&self, z: PlanePoint) -> Result<bool> {
        if z.norm_sqr() < self.inner_radius * self.inner_radius {
            return Ok(true);
        }
        self.inside_with_layer(z).map(|(b, _)| b)
    }

    /// Membership by Newton inversion only; the reference for the layered test.
    pub fn inside_newton(&self, z: PlanePoint) -> Result<bool> {
        Ok(self.invert_outside_ok(z.to_complex())?.norm() < 1.0)
    }

    /// Lower bound on `dist(z, ∂D)` from the cell grid (0 when unknown).
    pub fn distance_lower_bound(&self, z: PlanePoint) -> f64 {
        match self.grid.index(z) {
            Some(idx) => self.grid.min_dist[idx] as f64,
            None => 0.0,
        }
    }

    /// Nearest point of `∂D` for `z` within the reach of the boundary.
    pub fn project_to_boundary(&self, z: PlanePoint) -> Result<BoundaryProjection> {
        let zc = z.to_complex();
        let seed = match self.grid.index(z).map(|i| self.grid.seed[i]) {
            Some(s) if s != u32::MAX => s as usize,
            _ => self.nearest_sample(zc),
        };
        let n = self.boundary.len();
        let mut t = TAU * seed as f64 / n as f64;
        let pd = PartialDomain { coeffs: &self.coeffs };
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (f, d1, d2) = pd.curve(t);
            let diff = f - zc;
            let g = (diff.conj() * d1).re;
            let gp = d1.norm_sqr() + (diff.conj() * d2).re;
            let step = if gp > 0.0 { g / gp } else { g / d1.norm_sqr() };
            let step = step.clamp(-0.1, 0.1);
            t -= step;
            if step.abs() < 1e-15 {
                converged = true;
                break;
            }
        }
        let (f, d1, _) = pd.curve(t);
        let tangent = d1 / d1.norm();
        let diff = zc - f;
        let residual = (diff.conj() * tangent).re.abs();
        if !converged && residual > 1e-10 * self.diameter {
            return Err(Error::Geometry(format!("boundary projection did not converge at ({}, {})", z.re, z.im)));
        }
        let normal = Complex64::i() * tangent;
        let l = (diff.conj() * normal).re;
        if l.abs() >= self.reach {
            return Err(Error::Geometry(format!(
                "point ({}, {}) is {:.3e} from the boundary, beyond the reach {:.3e}",
                z.re,
                z.im,
                l.abs(),
                self.reach
            )));
        }
        Ok(BoundaryProjection { point: f.into(), l, normal: normal.into(), t: t.rem_euclid(TAU) })
    }

    /// `ψ(z) = F⁻¹(z)` for `z` in the closure of `D`.
    pub fn invert(&self, z: PlanePoint) -> Result<Complex64> {
        let w = self.invert_outside_ok(z.to_complex())?;
        if w.norm() > 1.0 + 1e-9 {
            return Err(Error::Geometry(format!("point ({}, {}) lies outside the domain", z.re, z.im)));
        }
        Ok(w)
    }

    /// Newton inversion that also accepts points slightly outside `D` (where
    /// `F` continues analytically); used by the inside test and by harmonic
    /// extensions evaluated in the outer collar.
    pub fn invert_outside_ok(&self, z: Complex64) -> Result<Complex64> {
        let seed = match self.grid.index(z.into()).map(|i| self.grid.seed[i]) {
            Some(s) if s != u32::MAX => s,
            _ => u32::MAX,
        };
        self.invert_seeded(z, seed)
    }

    fn invert_seeded(&self, z: Complex64, seed: u32) -> Result<Complex64> {
        let pd = PartialDomain { coeffs: &self.coeffs };
        let tol = 1e-13 * self.diameter.max(1e-300);
        let mut starts = Vec::with_capacity(3);
        if seed != u32::MAX {
            let e = Complex64::from_polar(1.0, TAU * seed as f64 / self.boundary.len() as f64);
            let (f, d) = pd.eval_d1(e);
            starts.push(e + (z - f) / d);
        }
        starts.push(z / self.coeffs[0]);
        for w0 in starts {
            if let Some(w) = damped_newton(&pd, z, w0, tol) {
                return Ok(w);
            }
        }
        // Continuation from the origin along s·z, s: 0 → 1.
        let mut w = Complex64::new(0.0, 0.0);
        let steps = 32;
        for k in 1..=steps {
            let target = z * (k as f64 / steps as f64);
            match damped_newton(&pd, target, w, if k == steps { tol } else { tol * 1e3 }) {
                Some(next) => w = next,
                None => {
                    return Err(Error::Geometry(format!("Newton inversion failed at ({}, {})", z.re, z.im)));
                }
            }
        }
        Ok(w)
    }

    /// `m(t) = 1/|F′(e^{it})|` with its first two `t`-derivatives.
    pub fn boundary_m(&self, t: f64) -> BoundaryModulus {
        let e = Complex64::from_polar(1.0, t);
        let [_, f1, f2, f3] = self.eval_d3(e);
        let i = Complex64::i();
        // d/dt F'(e^{it}) and d²/dt² F'(e^{it})
        let a1 = i * e * f2;
        let a2 = -e * f2 - e * e * f3;
        let q = f1.norm_sqr();
        let q1 = 2.0 * (a1 * f1.conj()).re;
        let q2 = 2.0 * (a2 * f1.conj()).re + 2.0 * a1.norm_sqr();
        let m = q.powf(-0.5);
        let dm = -0.5 * q.powf(-1.5) * q1;
        let d2m = 0.75 * q.powf(-2.5) * q1 * q1 - 0.5 * q.powf(-1.5) * q2;
        BoundaryModulus { m, dm, d2m }
    }

    /// `|F′(e^{it})|`, the arc-length density of the boundary parametrisation.
    pub fn speed(&self, t: f64) -> f64 {
        self.eval_d1(Complex64::from_polar(1.0, t)).1.norm()
    }

    /// Signed curvature of `∂D` at `F(e^{it})` (positive where convex).
    pub fn curvature(&self, t: f64) -> f64 {
        let (_, d1, d2) = PartialDomain { coeffs: &self.coeffs }.curve(t);
        (d1.conj() * d2).im / d1.norm().powi(3)
    }

    /// Green's function `G_D(0, z) = -ln|ψ(z)| / 2π`. Points in the outer
    /// collar get the harmonic continuation (negative values).
    pub fn greens_gd(&self, z: PlanePoint) -> Result<f64> {
        if z.norm_sqr() == 0.0 {
            return Err(Error::Geometry("G_D(0, z) has its pole at z = 0".into()));
        }
        let w = self.invert_outside_ok(z.to_complex())?;
        Ok(-w.norm().ln() / TAU)
    }

    /// Poisson kernel `H_D(0, F(e^{it})) = m(t) / 2π`.
    pub fn poisson_hd(&self, t: f64) -> f64 {
        self.boundary_m(t).m / TAU
    }

    fn nearest_sample(&self, z: Complex64) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (k, b) in self.boundary.iter().enumerate() {
            let d = (b - z).norm_sqr();
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }
}

/// Polynomial evaluation shared by the constructor (before the domain exists)
/// and the finished domain.
struct PartialDomain<'a> {
    coeffs: &'a [Complex64],
}

impl PartialDomain<'_> {
    #[inline]
    fn eval(&self, w: Complex64) -> Complex64 {
        let mut p = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            p = (p + c) * w;
        }
        p
    }

    #[inline]
    fn eval_d1(&self, w: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dp) = (zero, zero);
        for c in self.coeffs.iter().rev().chain(std::iter::once(&zero)) {
            dp = dp * w + p;
            p = p * w + c;
        }
        (p, dp)
    }

    fn eval_d3(&self, w: Complex64) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2, mut d3) = (zero, zero, zero, zero);
        for c in self.coeffs.iter().rev().chain(std::iter::once(&zero)) {
            d3 = d3 * w + d2;
            d2 = d2 * w + d1;
            d1 = d1 * w + p;
            p = p * w + c;
        }
        [p, d1, d2 * 2.0, d3 * 6.0]
    }

    /// `(z(t), z′(t), z″(t))` for the boundary curve `z(t) = F(e^{it})`.
    fn curve(&self, t: f64) -> (Complex64, Complex64, Complex64) {
        let e = Complex64::from_polar(1.0, t);
        let [f, f1, f2, _] = self.eval_d3(e);
        let i = Complex64::i();
        (f, i * e * f1, -e * f1 - e * e * f2)
    }
}

fn damped_newton(pd: &PartialDomain<'_>, z: Complex64, w0: Complex64, tol: f64) -> Option<Complex64> {
    let mut w = w0;
    let mut res = (pd.eval(w) - z).norm();
    for _ in 0..NEWTON_MAX_ITER {
        if res <= tol {
            return Some(w);
        }
        let (f, d) = pd.eval_d1(w);
        if d.norm() == 0.0 {
            return None;
        }
        let step = (f - z) / d;
        let mut lambda = 1.0;
        loop {
            let cand = w - step * lambda;
            let r = (pd.eval(cand) - z).norm();
            if r < res || lambda < 1e-4 {
                w = cand;
                res = r;
                break;
            }
            lambda *= 0.5;
        }
        if !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
    }
    (res <= tol).then_some(w)
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let s = if len2 > 0.0 { (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * s)).norm()
}

/// Crossing-number test against the closed polyline.
fn polygon_contains(poly: &[Complex64], p: Complex64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = (b.re - a.re) * (p.im - a.im) / (b.im - a.im) + a.re;
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl CellGrid {
    fn build(boundary: &[Complex64], outer: f64, reach: f64, max_seg: f64, sagitta: f64) -> Self {
        let n = GRID_CELLS;
        let lo = -outer * 1.02;
        let cell = 2.0 * outer * 1.02 / n as f64;
        let half_diag = cell * std::f64::consts::FRAC_1_SQRT_2;
        let slack = 0.5 * max_seg + sagitta;
        let seed_radius = reach.min(outer) + 2.0 * half_diag;
        let span = (seed_radius / cell).ceil() as isize + 1;

        let mut nearest = vec![f64::INFINITY; n * n];
        let mut seed = vec![u32::MAX; n * n];
        for (k, b) in boundary.iter().enumerate() {
            let ci = ((b.re - lo) / cell).floor() as isize;
            let cj = ((b.im - lo) / cell).floor() as isize;
            for i in (ci - span).max(0)..=(ci + span).min(n as isize - 1) {
                for j in (cj - span).max(0)..=(cj + span).min(n as isize - 1) {
                    let c = Complex64::new(lo + (i as f64 + 0.5) * cell, lo + (j as f64 + 0.5) * cell);
                    let d = (c - b).norm();
                    let idx = i as usize * n + j as usize;
                    if d < nearest[idx] {
                        nearest[idx] = d;
                        seed[idx] = k as u32;
                    }
                }
            }
        }
        // `nearest` over-estimates the curve distance by at most `slack`.
        let mut class = vec![CellClass::Outside; n * n];
        let mut min_dist = vec![0f32; n * n];
        let mut pure = vec![false; n * n];
        for idx in 0..n * n {
            let lower = if nearest[idx].is_finite() { nearest[idx] - slack } else { seed_radius - slack };
            let lower_cell = (lower - half_diag).max(0.0);
            min_dist[idx] = (lower_cell as f32) * (1.0 - 1e-6);
            if lower > half_diag {
                pure[idx] = true;
            } else {
                class[idx] = CellClass::Band;
            }
        }
        // Components of pure cells are uniformly inside or outside; decide one
        // representative per component with the polygon test.
        let mut visited = vec![false; n * n];
        for start in 0..n * n {
            if !pure[start] || visited[start] {
                continue;
            }
            let (i0, j0) = (start / n, start % n);
            let c = Complex64::new(lo + (i0 as f64 + 0.5) * cell, lo + (j0 as f64 + 0.5) * cell);
            let label = if polygon_contains(boundary, c) { CellClass::Inside } else { CellClass::Outside };
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(idx) = queue.pop_front() {
                class[idx] = label;
                let (i, j) = (idx / n, idx % n);
                let neighbours =
                    [(i > 0).then(|| idx - n), (i + 1 < n).then(|| idx + n), (j > 0).then(|| idx - 1), (j + 1 < n).then(|| idx + 1)];
                for nb in neighbours.into_iter().flatten() {
                    if pure[nb] && !visited[nb] {
                        visited[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        CellGrid { lo, cell, n, class, seed, min_dist }
    }

    #[inline]
    fn index(&self, z: PlanePoint) -> Option<usize> {
        let fi = (z.re - self.lo) / self.cell;
        let fj = (z.im - self.lo) / self.cell;
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (i < self.n && j < self.n).then(|| i * self.n + j)
    }
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::config(format!("cannot parse number '{s}'")))
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also `i`, `-i`, exponents allowed).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::config("empty coefficient"));
    }
    let bad = || Error::config(format!("cannot parse complex coefficient '{s}'"));
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(Complex64::new(t.parse::<f64>().map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is not leading and not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse::<f64>().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im > 0.0 {
        format!("{}+{}i", c.re, c.im)
    } else {
        format!("{}{}i", c.re, c.im)
    }
}

/// Angle difference reduced to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}
