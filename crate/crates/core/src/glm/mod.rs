//! Exponential-family GLM machinery: families, IRLS and the weighted hat
//! projection.

mod data;
mod family;
mod fit;
mod hat;

pub use data::ModelData;
pub use family::{logistic, Dispersion, Family, FamilyKind, MU_CLAMP};
pub use fit::{fit_glm, fit_null, GlmFit, IrlsConfig, NullFit, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use hat::{hat_projection, weighted_gram_inverse, WeightedProjector};
pub(crate) use hat::factor_gram;
