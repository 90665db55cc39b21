//! Coordination codes: explicit encoder, recoder and decoder tables, their
//! induced action distributions, exact and Monte-Carlo distortion, random
//! codebook construction and block repetition.

mod build;
#[allow(clippy::module_inception)]
mod code;
mod codebook;
mod eval;
mod search;

pub use build::{build_codebook_code, build_codebook_code_capped, DEFAULT_TABLE_CAP};
pub use code::{apply_code, block_repeat, message_count, Actions, CoordinationCode, Encoder};
pub use codebook::Codebook;
pub use eval::{
    expected_tv_exact, expected_tv_monte_carlo, induced_distribution, InducedDistribution, Quantile, Realization,
    SimReport, ENUMERATION_GUARD, QUANTILE_LEVELS,
};
pub(crate) use search::counts_tv;
