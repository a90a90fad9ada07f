//! The block sign-flip score test.
//!
//! Contributions `nu_i = a_i r_i` of the effective score are computed once
//! under the null fit. Each flip multiplies them by block-constant signs and
//! standardizes by the flip-specific variance; the p-value is the share of
//! flips at least as extreme as the identity.

mod blocks;
mod engine;
mod plan;
mod pvalue;
mod score;

pub use blocks::{block_structure, BlockStructure};
pub use engine::{flip_test, multi_df_test, FlipTestResult, MultiDfResult};
pub use plan::{generate_flips, FlipPlan};
pub use pvalue::{compute_pvalue, exceedances, Alternative};
pub use score::{flip_variance, flipped_score, score_decomposition, standardized_score, ScoreDecomposition};
