//! Random walks with disk-uniform steps: exit functionals, potential kernel,
//! and the boundary correction to the discrete harmonic measure.

pub mod bessel;
pub mod density;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod halfplane;
pub mod parallel;
pub mod point;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use point::PlanePoint;
