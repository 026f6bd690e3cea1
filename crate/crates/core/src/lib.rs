//! Single-anchor range localization.
//!
//! A single aerial anchor flies a known path and measures its distance to a
//! ground target over time. The sequence of (anchor position, range) pairs
//! stands in for the many static anchors classical multilateration needs.
//!
//! Modules:
//! - [`geometry`]: positions, trajectories, and the mirror ambiguity of
//!   straight-line paths.
//! - [`ranging`]: line-of-sight checks against box obstacles, the distance
//!   dependent noise model, and per-revolution measurement matrices.
//! - [`waveform`] (`std` only): OFDM and OTFS pilots, a doubly dispersive
//!   channel, and time-of-arrival estimation.
//! - [`localization`]: least-squares solvers and the Cramér-Rao bound.
//! - [`relocation`]: per-revolution trajectory updates.
//!
//! Without the default `std` feature the crate builds as `no_std + alloc`;
//! only the waveform engine is unavailable there.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod geometry;
pub mod localization;
mod math;
pub mod ranging;
pub mod relocation;
pub mod rng;
#[cfg(feature = "std")]
pub mod waveform;

pub use error::{Error, Result};
pub use geometry::{distance, Position3, TrajectorySpec, WaypointSeries};
pub use localization::{AnchorRange, Bounds, Solution, SolveOptions};
pub use ranging::{MeasurementMatrix, NoiseModel, Obstacle, RangeMeasurement};
pub use relocation::RelocationPolicy;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
