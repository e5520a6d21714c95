//! Guaranteed-privacy functional perturbation for distributed nonconvex
//! optimization.
//!
//! Agents hide their local objectives behind interval-valued outputs built
//! from a mixed-monotone decomposition, then jointly optimize the perturbed
//! sum on a simulated network.

pub mod accuracy;
pub mod dist_opt;
pub mod error;
pub mod harness;
pub mod interval;
pub mod mixed_monotone;
pub mod objective;
pub mod privacy;
pub mod sampling;
pub mod simplex;
pub mod slope_design;

pub use error::{Error, Result};
