use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::glm::{fit_glm, weighted_gram_inverse, Family, IrlsConfig, ModelData};

/// A Wald z test of one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldResult {
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    /// `z^2`, the one-df chi-square form.
    pub chi2: f64,
    pub p_value: f64,
    pub converged: bool,
}

impl WaldResult {
    pub(crate) fn from_estimate(estimate: f64, variance: f64, converged: bool) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::DegenerateVariance { variance });
        }
        let std_error = variance.sqrt();
        let z = estimate / std_error;
        Ok(Self { estimate, std_error, z, chi2: z * z, p_value: normal_two_sided_p(z), converged })
    }
}

/// `2 * (1 - Phi(|z|))`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.cdf(-z.abs())).min(1.0)
}

/// Fits the full model `[x | z]` and tests coefficient `column` of `x` with
/// the model-based (inverse Fisher information) standard error.
pub fn wald_glm_test(data: &ModelData, family: &Family, column: usize) -> Result<WaldResult> {
    data.validate(family)?;
    if column >= data.x.ncols() {
        return Err(Error::ColumnOutOfRange { index: column, len: data.x.ncols() });
    }
    let design = data.full_design();
    let fit = fit_glm(&data.y, &design, &data.offset, family, &IrlsConfig::default())?;
    let cov = weighted_gram_inverse(&design, &fit.w_diag)?;
    WaldResult::from_estimate(fit.coefficients[column], cov[(column, column)], fit.converged)
}
