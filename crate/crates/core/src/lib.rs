//! Ground states of the semi-discrete random variational problem
//! `min_h D(h) - W(h)`, where each interior lattice column carries an
//! independent two-sided Brownian motion in the height variable.
//!
//! The crate computes exact grid minimizers, decomposes them by dyadic scale,
//! builds explicit competitor configurations and runs the Monte Carlo
//! estimators used to probe the `L ln L` energy scaling.

pub mod combinatorics;
pub mod config;
pub mod constructions;
pub mod energy;
pub mod error;
pub mod minimizer;
pub mod multiscale;
pub mod potential;
pub mod stats;
pub mod sum;

pub use error::{Error, Result};
pub use energy::{EnergyBreakdown, HeightConfig};
pub use minimizer::{minimize, GroundState, MinimizeOptions, Span};
pub use multiscale::ScaleDecomposition;
pub use potential::{Potential, PotentialField, ZeroField};
