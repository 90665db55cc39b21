//! Toolkit for empirical coordination under a total-variation fidelity
//! criterion: exact pmf algebra, coordination codes and their simulation,
//! convex solvers for rate-distortion-coordination regions, and brute-force
//! oracles.

pub mod check;
pub mod cli;
pub mod code;
pub mod error;
pub mod oracle;
pub mod prob;
pub mod region;

pub use error::{CoordError, Result};
