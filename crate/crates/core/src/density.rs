//! First-order correction density on the boundary.
//!
//! With `m(θ) = 1/|F′(e^{iθ})|` the boundary modulus of `ψ = F⁻¹`,
//!
//! `ρ(φ) = (1/4π²) ∫₀^{2π} [m(θ) − m(φ) − m′(φ)·sin(θ−φ)] / (1 − cos(θ−φ)) dθ`.
//!
//! Pulling `∫ g σ_D |dz|` back to the circle with `|dz| = dφ / m(φ)` turns it
//! into `K ∫ (g∘F)(e^{iφ}) ρ(φ) dφ`, so on the boundary point `F(e^{iφ})` the
//! density with respect to arc length is `σ_D = K·m·ρ`.
//!
//! The integrand has a removable singularity at `θ = φ` (limit `m″(φ)`). The
//! midpoint rule on `θ_j = φ + (j + ½)·2π/N` never touches it and converges
//! spectrally for analytic `m`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{parse_complex, AnalyticDomain};
use crate::error::{Error, Result};
use crate::point::PlanePoint;

/// Largest tolerated change of `ρ` between grid sizes `N` and `2N`.
pub const RESOLUTION_TOL: f64 = 1e-8;

/// Boundary test functions selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundaryFn {
    /// `1`
    One,
    /// `Re z`
    Re,
    /// `Im z`
    Im,
    /// `(Re z)²`
    Re2,
    /// Indicator of `Im z > 0`
    UpperHalf,
    /// `exp(−|z − center|² / (2·width²))`
    GaussBump { center: PlanePoint, width: f64 },
}

impl BoundaryFn {
    #[inline]
    pub fn eval(&self, z: PlanePoint) -> f64 {
        match *self {
            BoundaryFn::One => 1.0,
            BoundaryFn::Re => z.re,
            BoundaryFn::Im => z.im,
            BoundaryFn::Re2 => z.re * z.re,
            BoundaryFn::UpperHalf => f64::from(u8::from(z.im > 0.0)),
            BoundaryFn::GaussBump { center, width } => (-(z - center).norm_sqr() / (2.0 * width * width)).exp(),
        }
    }

    /// Parses `one`, `re`, `im`, `re2`, `upper` or `gauss_bump(center,width)` with a
    /// complex centre such as `0.5+0.2i`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "one" => return Ok(BoundaryFn::One),
            "re" => return Ok(BoundaryFn::Re),
            "im" => return Ok(BoundaryFn::Im),
            "re2" => return Ok(BoundaryFn::Re2),
            "upper" => return Ok(BoundaryFn::UpperHalf),
            _ => {}
        }
        let bad = || Error::config(format!("unknown boundary function '{s}' (expected one, re, im, re2, upper, gauss_bump(center,width))"));
        let args = t.strip_prefix("gauss_bump(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (c, w) = args.rsplit_once(',').ok_or_else(bad)?;
        let center = parse_complex(c)?;
        let width: f64 = w.trim().parse().map_err(|_| bad())?;
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::config(format!("gauss_bump width must be positive, got {width}")));
        }
        Ok(BoundaryFn::GaussBump { center: center.into(), width })
    }

    pub fn name(&self) -> String {
        match self {
            BoundaryFn::One => "one".into(),
            BoundaryFn::Re => "re".into(),
            BoundaryFn::Im => "im".into(),
            BoundaryFn::Re2 => "re2".into(),
            BoundaryFn::UpperHalf => "upper".into(),
            BoundaryFn::GaussBump { center, width } => {
                format!("gauss_bump({}{:+}i,{})", center.re, center.im, width)
            }
        }
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 64 || !n.is_multiple_of(2) {
        return Err(Error::config(format!("density grid size must be even and at least 64, got {n}")));
    }
    Ok(())
}

/// `ρ(φ)` by the offset midpoint rule with `n` nodes.
pub fn rho(phi: f64, dom: &AnalyticDomain, n: usize) -> Result<f64> {
    check_grid(n)?;
    let m0 = dom.boundary_m(phi);
    let step = TAU / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        let delta = (j as f64 + 0.5) * step;
        let m = dom.boundary_m(phi + delta).m;
        let half = (0.5 * delta).sin();
        sum += (m - m0.m - m0.dm * delta.sin()) / (2.0 * half * half);
    }
    Ok(sum * step / (4.0 * PI * PI))
}

/// `ρ` on the grid `φ_k = 2πk/n`, in `O(n²)` from one pass of `m` on the
/// half-shifted grid.
pub fn rho_grid(dom: &AnalyticDomain, n: usize) -> Result<Vec<f64>> {
    check_grid(n)?;
    let step = TAU / n as f64;
    let on_grid: Vec<_> = (0..n).map(|k| dom.boundary_m(k as f64 * step)).collect();
    let shifted: Vec<f64> = (0..n).map(|k| dom.boundary_m((k as f64 + 0.5) * step).m).collect();
    let (sin_d, denom): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| {
            let delta = (j as f64 + 0.5) * step;
            let half = (0.5 * delta).sin();
            (delta.sin(), 2.0 * half * half)
        })
        .unzip();
    Ok((0..n)
        .map(|k| {
            let m0 = on_grid[k];
            let mut sum = 0.0;
            for j in 0..n {
                sum += (shifted[(k + j) % n] - m0.m - m0.dm * sin_d[j]) / denom[j];
            }
            sum * step / (4.0 * PI * PI)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTable {
    pub grid: Vec<f64>,
    pub m_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub grid_size: usize,
    pub k_value: f64,
    /// `max |ρ_N − ρ_{2N}|` over the common grid points.
    pub resolution_error: f64,
    pub under_resolved: bool,
}

impl DensityTable {
    /// `Σ ρ_k·2π/N`, zero up to rounding for a converged table.
    pub fn total_mass(&self) -> f64 {
        self.rho_values.iter().sum::<f64>() * TAU / self.grid_size as f64
    }

    /// `K ∫₀^{2π} g(F(e^{iφ})) ρ(φ) dφ`.
    pub fn predicted_slope(&self, g: &BoundaryFn, dom: &AnalyticDomain) -> f64 {
        let sum: f64 = self.grid.iter().zip(&self.rho_values).map(|(&phi, r)| g.eval(dom.boundary_point(phi)) * r).sum();
        self.k_value * sum * TAU / self.grid_size as f64
    }
}

/// Full table of `m`, `ρ` and `σ_D = K·m·ρ` on `n` equispaced angles.
pub fn sigma_d(dom: &AnalyticDomain, k_value: f64, n: usize) -> Result<DensityTable> {
    if !(k_value > 0.0 && k_value.is_finite()) {
        return Err(Error::config(format!("K must be positive, got {k_value}")));
    }
    let rho_values = rho_grid(dom, n)?;
    let fine = rho_grid(dom, 2 * n)?;
    let resolution_error = rho_values.iter().enumerate().map(|(k, r)| (r - fine[2 * k]).abs()).fold(0.0, f64::max);
    let grid: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let m_values: Vec<f64> = grid.iter().map(|&t| dom.boundary_m(t).m).collect();
    let sigma_values = m_values.iter().zip(&rho_values).map(|(m, r)| k_value * m * r).collect();
    Ok(DensityTable {
        grid,
        m_values,
        rho_values,
        sigma_values,
        grid_size: n,
        k_value,
        resolution_error,
        under_resolved: resolution_error > RESOLUTION_TOL,
    })
}

/// `∫ g dω(0, ·; D) = (1/2π) ∫ g(F(e^{iφ})) dφ` by the periodic trapezoid rule.
pub fn continuous_integral(g: &BoundaryFn, dom: &AnalyticDomain, n: usize) -> f64 {
    let n = n.max(1);
    (0..n).map(|k| g.eval(dom.boundary_point(TAU * k as f64 / n as f64))).sum::<f64>() / n as f64
}

/// Harmonic extension of `g` from `∂D` into `D`, `f = Re Σ_k a_k ψ(z)^k`,
/// from the Fourier coefficients of `g∘F` on the circle. The series also
/// converges a little outside `D`, where walk exit points land.
#[derive(Debug, Clone)]
pub struct HarmonicExtension {
    /// `a_0 = ĝ_0`, `a_k = 2ĝ_k` for `k ≥ 1`.
    coeffs: Vec<Complex64>,
}

impl HarmonicExtension {
    pub fn new(g: &BoundaryFn, dom: &AnalyticDomain, n: usize) -> Self {
        let n = n.max(8);
        let samples: Vec<f64> = (0..n).map(|k| g.eval(dom.boundary_point(TAU * k as f64 / n as f64))).collect();
        let scale = samples.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let mut coeffs: Vec<Complex64> = (0..n / 2)
            .map(|k| {
                let c: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, v)| Complex64::from_polar(*v, -TAU * (k * j % n) as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64;
                if k == 0 {
                    c
                } else {
                    2.0 * c
                }
            })
            .collect();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() < 1e-15 * scale) {
            coeffs.pop();
        }
        HarmonicExtension { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value at disk coordinate `w = ψ(z)`.
    #[inline]
    pub fn eval_disk(&self, w: Complex64) -> f64 {
        let mut p = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            p = p * w + c;
        }
        p.re
    }

    pub fn eval(&self, z: PlanePoint, dom: &AnalyticDomain) -> Result<f64> {
        Ok(self.eval_disk(dom.invert_outside_ok(z.to_complex())?))
    }

    /// Value at the origin, `ĝ_0 = ∫ g dω`.
    pub fn at_origin(&self) -> f64 {
        self.coeffs[0].re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_boundary_functions() {
        assert_eq!(BoundaryFn::parse("re2").unwrap(), BoundaryFn::Re2);
        let b = BoundaryFn::parse("gauss_bump(0.5+0.2i, 0.3)").unwrap();
        assert_eq!(b, BoundaryFn::GaussBump { center: PlanePoint::new(0.5, 0.2), width: 0.3 });
        assert_eq!(BoundaryFn::parse(&b.name()).unwrap(), b);
        assert!(BoundaryFn::parse("cube").is_err());
        assert!(BoundaryFn::parse("gauss_bump(0,0)").is_err());
    }

    #[test]
    fn grid_requirements() {
        let d = AnalyticDomain::unit_disk();
        assert!(rho(0.0, &d, 63).is_err());
        assert!(rho(0.0, &d, 66).is_ok());
        assert!(rho(0.0, &d, 32).is_err());
        assert!(sigma_d(&d, 0.0, 64).is_err());
    }

    #[test]
    fn grid_matches_pointwise() {
        let d = AnalyticDomain::asymmetric();
        let n = 128;
        let g = rho_grid(&d, n).unwrap();
        for k in [0, 17, 90] {
            let p = rho(TAU * k as f64 / n as f64, &d, n).unwrap();
            assert!((g[k] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_extension_of_re2_on_disk() {
        let d = AnalyticDomain::unit_disk();
        let f = HarmonicExtension::new(&BoundaryFn::Re2, &d, 64);
        // Re(z)² = 1/2 + Re(z²)/2 on the circle
        let z = PlanePoint::new(0.3, 0.4);
        assert!((f.eval(z, &d).unwrap() - (0.5 + 0.5 * (0.09 - 0.16))).abs() < 1e-14);
        assert_eq!(f.degree(), 2);
        assert!((f.at_origin() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn continuous_integral_examples() {
        let card = AnalyticDomain::cardioid(0.2).unwrap();
        assert!((continuous_integral(&BoundaryFn::One, &card, 64) - 1.0).abs() < 1e-15);
        assert!(continuous_integral(&BoundaryFn::Re, &AnalyticDomain::unit_disk(), 64).abs() < 1e-15);
        assert!((continuous_integral(&BoundaryFn::Re2, &card, 64) - 0.52).abs() < 1e-10);
    }
}
