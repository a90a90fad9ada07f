//! Block sign-flip score tests for generalized linear models with clustered
//! observations.
//!
//! The crate is organised in layers:
//!
//! * [`glm`]: exponential families, IRLS fitting of the null model and the
//!   weighted hat projection.
//! * [`flip`]: effective-score contributions, block-constant sign flips, the
//!   standardized flipped statistic and Monte Carlo p-values.
//! * [`baselines`]: the GLM Wald test and the independence GEE with a cluster
//!   sandwich variance.
//! * [`sim`]: clustered binary data generation and rejection-rate studies.
//! * [`cli`]: CSV ingestion, report generation and the simulation grid runner
//!   behind the `flipscore` binary.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod flip;
pub mod glm;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use flip::{
    Alternative, BlockStructure, FlipPlan, FlipTestResult, MultiDfResult, ScoreDecomposition,
};
pub use glm::{Dispersion, Family, FamilyKind, ModelData, NullFit};
