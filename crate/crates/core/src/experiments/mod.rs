//! End-to-end experiments combining the walk with the analytic predictions.

pub mod blayer;
pub mod greens;
pub mod sweep;
