//! Exact finite-alphabet probability algebra.

mod info;
mod lemma;
mod pmf;
mod types;

pub(crate) use info::plogq;
pub use info::{entropy, h2, mutual_information};
pub use lemma::{averaged_marginals, brute_force_expected_type, coordinate_marginals, expected_type};
pub use pmf::{compose, in_delta_neighborhood, total_variation, CondPmf, Conditional, JointPmf, Pmf, MASS_TOL};
pub use types::{joint_type, Symbol, TypeRecord};

/// Largest possible total variation between two pmfs.
pub const TV_MAX: f64 = 1.0;
