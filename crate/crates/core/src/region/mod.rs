//! Rate-distortion-coordination regions for the two-node and cascade
//! networks.

mod barrier;
mod config;
mod delta_star;
pub(crate) mod program;
mod solver;

pub use config::SolverConfig;
pub use delta_star::{delta_star, delta_star_with_output, DeltaStar};
pub use solver::{
    cascade_rates, region_membership, scalarization_sweep, solve_cascade, solve_two_node, Frontier, Membership,
    Provenance, RegionPoint,
};
