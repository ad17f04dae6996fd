use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex plane.
///
/// Both coordinates are finite. The hot simulation loops construct points
/// through arithmetic on already-valid points, so the check is only made in
/// [`PlanePoint::try_new`] and in debug builds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub re: f64,
    pub im: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { re: 0.0, im: 0.0 };

    #[inline]
    pub fn new(re: f64, im: f64) -> Self {
        debug_assert!(re.is_finite() && im.is_finite(), "non-finite point ({re}, {im})");
        PlanePoint { re, im }
    }

    pub fn try_new(re: f64, im: f64) -> Result<Self> {
        if re.is_finite() && im.is_finite() {
            Ok(PlanePoint { re, im })
        } else {
            Err(Error::config(format!("non-finite point ({re}, {im})")))
        }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        PlanePoint::new(r * c, r * s)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    #[inline]
    pub fn dot(self, other: PlanePoint) -> f64 {
        self.re * other.re + self.im * other.im
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for PlanePoint {
    #[inline]
    fn from(z: Complex64) -> Self {
        PlanePoint::new(z.re, z.im)
    }
}

impl From<PlanePoint> for Complex64 {
    #[inline]
    fn from(p: PlanePoint) -> Self {
        Complex64::new(p.re, p.im)
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn add(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn sub(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn mul(self, s: f64) -> PlanePoint {
        PlanePoint::new(self.re * s, self.im * s)
    }
}
