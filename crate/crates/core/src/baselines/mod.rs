//! Comparison methods: the model-based GLM Wald test and the independence
//! GEE with a cluster sandwich variance.

mod gee;
mod wald;

pub use gee::{gee_independence_fit, gee_wald_test, sandwich_variance, SandwichFit};
pub use wald::{normal_two_sided_p, wald_glm_test, WaldResult};
