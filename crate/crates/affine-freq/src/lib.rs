//! Instantaneous frequency estimation for AC voltage waveforms from the
//! invariants of their planar trajectories.
//!
//! A three-phase voltage maps to a plane curve through the Clarke
//! transform (a single-phase voltage through a derivative-based quadrature
//! embedding). The planar bracket `[a, b] = a1*b2 - b1*a2` of the curve
//! and its time derivatives then yields two frequency estimators:
//!
//! * `omega_a = sqrt([v', v''] / [v, v'])` — exact for stationary
//!   sinusoids regardless of unbalance (the trajectory may be any
//!   ellipse), and a close approximation under slow modulation;
//! * `omega_k = [v, v'] / |v|^2` — the curvature-based estimate, exact
//!   only on circles (balanced systems).
//!
//! The crate also ships SRF and transport-delay PLL baselines, a
//! Butterworth biquad for pre/post filtering, a synthetic scenario
//! catalog with exact analytic ground truth, CSV ingestion for measured
//! waveforms, and a CLI (`affine-freq`) that orchestrates comparisons.

pub mod analytic;
pub mod config;
pub mod error;
pub mod filtering;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod pll;
pub mod transforms;
pub mod waveforms;

pub mod cli;

pub use error::{Error, Result};
