//! Geofence perimeter estimation under a privacy constraint.
//!
//! Given a privacy constraint `k` (the expected number of individuals a
//! perimeter may capture) and some knowledge of population density, the
//! [`estimators`] compute perimeter dimensions. [`simulator`] evaluates them
//! against interacting agent random walks, [`risk`] scores proposed
//! perimeters against a density raster, and [`verification`] holds the
//! Monte-Carlo checks of the underlying point-process identities.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod point_process;
pub mod risk;
pub mod simulator;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
