//! Potential kernel of the unit-step walk.
//!
//! `a(x) = Σ_k [p(k,0,0) − p(k,0,x)]`. The first two terms are explicit (the
//! one- and two-step densities); the rest is the radial Fourier integral
//!
//! `(1/2π) ∫₀^∞ (1 − J₀(r|x|)) · φ(r)³ / (1 − φ(r)) · r dr`,
//!
//! obtained from the planar integral by doing the angular part in closed
//! form. Near `r = 0` the integrand tends to `2|x|²r`; for large `r` it
//! decays like `r^{-7/2}` while oscillating, so it is integrated in panels
//! no wider than half an oscillation of `J₀(r|x|)`.

use std::f64::consts::{FRAC_1_PI, PI};

use serde::Serialize;

use crate::bessel::{charfn, one_minus_charfn, one_minus_j0};
use crate::error::{Error, Result};
use crate::point::PlanePoint;
use crate::quadrature::{gauss_legendre, integrate_on};
use crate::stats::weighted_least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFnSample {
    pub r: f64,
    pub phi: f64,
}

impl CharFnSample {
    pub fn at(r: f64) -> Self {
        CharFnSample { r, phi: charfn(r) }
    }
}

/// Settings for the radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelQuadrature {
    /// Upper integration limit.
    pub r_max: f64,
    /// Gauss points per panel.
    pub points: usize,
    /// Allowed change of the integral between `r_max/2` and `r_max`.
    pub cauchy_tol: f64,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        KernelQuadrature { r_max: 1000.0, points: 12, cauchy_tol: 1e-7 }
    }
}

/// Two-step density `p(2,0,x)`: area of the lens `B(0,1) ∩ B(x,1)` over `π²`.
pub fn p2(x: PlanePoint) -> f64 {
    p2_radial(x.norm())
}

pub fn p2_radial(d: f64) -> f64 {
    if d >= 2.0 {
        return 0.0;
    }
    let half = 0.5 * d;
    (2.0 * half.acos() - half * (4.0 - d * d).sqrt()) / (PI * PI)
}

/// `a(x)` with default quadrature settings.
pub fn potential_a(x: PlanePoint) -> Result<f64> {
    potential_a_with(x, &KernelQuadrature::default())
}

pub fn potential_a_with(x: PlanePoint, quad: &KernelQuadrature) -> Result<f64> {
    let s = x.norm();
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(explicit_terms(s) + fourier_term(s, quad)?)
}

/// `[p(1,0,0) − p(1,0,x)] + [p(2,0,0) − p(2,0,x)]` for `|x| = s`.
fn explicit_terms(s: f64) -> f64 {
    let one = if s >= 1.0 { FRAC_1_PI } else { 0.0 };
    one + (FRAC_1_PI - p2_radial(s))
}

fn fourier_term(s: f64, quad: &KernelQuadrature) -> Result<f64> {
    let rule = gauss_legendre(quad.points);
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let phi = charfn(r);
        one_minus_j0(r * s) * phi * phi * phi / one_minus_charfn(r) * r
    };
    let width = (PI / s).min(PI);
    let panels = (quad.r_max / width).ceil() as usize;
    let half_panels = panels / 2;
    let mut total = 0.0;
    let mut at_half = 0.0;
    for k in 0..panels {
        let a = k as f64 * width;
        total += integrate_on(&rule, a, a + width, integrand);
        if k + 1 == half_panels {
            at_half = total;
        }
    }
    if (total - at_half).abs() > quad.cauchy_tol * 2.0 * PI {
        return Err(Error::Quadrature(format!(
            "potential-kernel integral at |x| = {s} changed by {:.3e} between r = {} and r = {}",
            (total - at_half).abs() / (2.0 * PI),
            half_panels as f64 * width,
            panels as f64 * width
        )));
    }
    Ok(total / (2.0 * PI))
}

/// `a(x) − (4/π)ln|x|`.
pub fn residual(s: f64) -> Result<f64> {
    Ok(potential_a(PlanePoint::new(s, 0.0))? - 4.0 / PI * s.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialProfile {
    pub radii: Vec<f64>,
    pub a_values: Vec<f64>,
    /// `a − (4/π)ln r`.
    pub residuals: Vec<f64>,
    pub c0_hat: f64,
    /// One standard error of `c0_hat` from the fit.
    pub c0_ci: f64,
    /// Coefficient of the `r⁻²` correction.
    pub c2_hat: f64,
    /// Residuals of the free fit.
    pub fit_residuals: Vec<f64>,
}

/// Least-squares fit of `residual(r) = C₀ + c·r⁻²` over `radii`.
pub fn fit_c0(radii: &[f64]) -> Result<PotentialProfile> {
    check_radii(radii)?;
    let a_values = radii.iter().map(|&r| potential_a(PlanePoint::new(r, 0.0))).collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = radii.iter().zip(&a_values).map(|(r, a)| a - 4.0 / PI * r.ln()).collect();
    fit_from_residuals(radii, a_values, residuals)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 6 {
        return Err(Error::config(format!("C0 fit needs at least 6 radii, got {}", radii.len())));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::config("radii must be positive"));
    }
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(Error::config(format!("radii must span a factor of at least 4, got [{lo}, {hi}]")));
    }
    Ok(())
}

/// Fit on precomputed residuals (used by tests and the CLI).
pub fn fit_from_residuals(radii: &[f64], a_values: Vec<f64>, residuals: Vec<f64>) -> Result<PotentialProfile> {
    check_radii(radii)?;
    let rows: Vec<Vec<f64>> = radii.iter().map(|r| vec![1.0, r.powi(-2)]).collect();
    let fit = weighted_least_squares(&rows, &residuals, &vec![1.0; radii.len()])
        .ok_or_else(|| Error::config("C0 fit is ill-conditioned; spread the radii"))?;
    let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
    let dof = (radii.len() - 2) as f64;
    let sigma = (rss / dof).sqrt();
    Ok(PotentialProfile {
        radii: radii.to_vec(),
        a_values,
        residuals,
        c0_hat: fit.coeffs[0],
        c0_ci: fit.stderrs[0] * sigma,
        c2_hat: fit.coeffs[1],
        fit_residuals: fit.residuals,
    })
}

/// Deviation `Δ₁a(x) − (1/π)·1_{|x|<1}`, where `Δ₁` is the unit-disk
/// average difference. Since `a` is radial, the average over `B(x,1)` is a
/// one-dimensional integral over `s = |y|` weighted by the length of the arc
/// `{|y| = s} ∩ B(x,1)`.
pub fn check_delta_identity(x: PlanePoint) -> Result<f64> {
    let d = x.norm();
    if ((d - 1.0).abs()) <= 0.05 {
        return Err(Error::config(format!("|x| = {d} is within 0.05 of the unit circle")));
    }
    let a_x = potential_a(x)?;
    let avg = disk_average_radial(d, |s| potential_a(PlanePoint::new(s, 0.0)))?;
    let target = if d < 1.0 { FRAC_1_PI } else { 0.0 };
    Ok(avg - a_x - target)
}

/// `(1/π)∫_{B(x,1)} f(|y|) dy` for `|x| = d`.
pub fn disk_average_radial(d: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    // Arc length of the circle of radius s inside B(x,1).
    let arc = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if d == 0.0 {
            return if s < 1.0 { 2.0 * PI * s } else { 0.0 };
        }
        let c = (s * s + d * d - 1.0) / (2.0 * s * d);
        if c <= -1.0 {
            2.0 * PI * s
        } else if c >= 1.0 {
            0.0
        } else {
            2.0 * s * c.acos()
        }
    };
    let lo = (d - 1.0).max(0.0);
    let hi = d + 1.0;
    let mut breaks = vec![lo, hi, 1.0, 2.0, (1.0 - d).abs()];
    breaks.retain(|&b| b >= lo && b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let rule = gauss_legendre(24);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        // s = a + (b − a)(1 − cos τ)/2 clusters nodes at both ends, absorbing
        // the square-root behaviour of the arc length at its endpoints.
        let mut err = None;
        let part = integrate_on(&rule, 0.0, PI, |tau| {
            let s = a + 0.5 * (b - a) * (1.0 - tau.cos());
            let ds = 0.5 * (b - a) * tau.sin();
            match f(s) {
                Ok(v) => v * arc(s) * ds,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        total += part;
    }
    Ok(total / PI)
}
