//! Bessel-type functions of the step law.
//!
//! The step is uniform on the unit disk, so its characteristic function is
//! radial: `φ(r) = 2·J₁(r)/r`. Differences `1 − φ` and `1 − J₀` are formed by
//! their power series for small arguments, where the direct subtraction would
//! lose most of its digits.

const SERIES_SWITCH: f64 = 2.0;

/// `J₀(x)`.
#[inline]
pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

/// `J₁(x)`.
#[inline]
pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Characteristic function of the unit-disk step at radial frequency `r`.
pub fn charfn(r: f64) -> f64 {
    let r = r.abs();
    if r < SERIES_SWITCH {
        1.0 - one_minus_charfn(r)
    } else {
        2.0 * j1(r) / r
    }
}

/// `1 − φ(r)`, accurate in relative terms near `r = 0`.
pub fn one_minus_charfn(r: f64) -> f64 {
    let r = r.abs();
    if r >= SERIES_SWITCH {
        return 1.0 - 2.0 * j1(r) / r;
    }
    // 1 − φ = Σ_{k≥1} (−1)^{k+1} (r/2)^{2k} / (k!(k+1)!)
    let q = 0.25 * r * r;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..40 {
        term *= -q / (k as f64 * (k + 1) as f64);
        sum -= term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `1 − J₀(x)`, accurate in relative terms near `x = 0`.
pub fn one_minus_j0(x: f64) -> f64 {
    let x = x.abs();
    if x >= SERIES_SWITCH {
        return 1.0 - j0(x);
    }
    // 1 − J₀ = Σ_{k≥1} (−1)^{k+1} (x/2)^{2k} / (k!)²
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..40 {
        term *= -q / (k as f64 * k as f64);
        sum -= term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `1/(1 − φ(r)) − 8/r²`, the regular part of the inverse symbol; tends to 1/3.
pub fn regular_inverse_symbol(r: f64) -> f64 {
    let r = r.abs();
    if r < 0.05 {
        // 1 − φ = (r²/8)(1 − r²/24 + r⁴/1152 − …)
        let s = r * r;
        let e = s / 24.0 - s * s / 1152.0 + s * s * s / 92160.0;
        // 8/r² · (1/(1−e) − 1) = (8/r²) · (e + e² + e³ …)
        let geo = e * (1.0 + e * (1.0 + e * (1.0 + e)));
        return 8.0 / s * geo;
    }
    1.0 / one_minus_charfn(r) - 8.0 / (r * r)
}
