use nalgebra::{DMatrix, DVector};

use crate::baselines::wald::WaldResult;
use crate::error::{Error, Result};
use crate::flip::BlockStructure;
use crate::glm::{factor_gram, fit_glm, Family, IrlsConfig, ModelData};

/// Independence-GEE fit of the full model `[x | z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichFit {
    /// Coefficients of `[x | z]`, tested columns first.
    pub beta_hat: DVector<f64>,
    /// Inverse bread `W0^{-1}`.
    pub model_variance: DMatrix<f64>,
    /// `W0^{-1} W1 W0^{-1}`.
    pub sandwich_variance: DMatrix<f64>,
    pub clusters: BlockStructure,
    pub dispersion: f64,
    pub converged: bool,
}

/// Solves the independence estimating equation (the GLM score equation of
/// the full model) and computes the cluster sandwich.
pub fn gee_independence_fit(data: &ModelData, family: &Family) -> Result<SandwichFit> {
    data.validate(family)?;
    let design = data.full_design();
    let fit = fit_glm(&data.y, &design, &data.offset, family, &IrlsConfig::default())?;
    let mut out = SandwichFit {
        beta_hat: fit.coefficients,
        model_variance: DMatrix::zeros(0, 0),
        sandwich_variance: DMatrix::zeros(0, 0),
        clusters: BlockStructure::from_labels(&data.cluster),
        dispersion: fit.dispersion,
        converged: fit.converged,
    };
    let (bread_inv, sandwich) = sandwich_parts(&out, data, family)?;
    out.model_variance = bread_inv;
    out.sandwich_variance = sandwich;
    Ok(out)
}

/// `(W0^{-1}, W0^{-1} W1 W0^{-1})` with cluster sums
/// `W0 = sum_j D_j' V_j^{-1} D_j` and
/// `W1 = sum_j D_j' V_j^{-1} r_j r_j' V_j^{-1} D_j`, `D_j = d mu_j / d beta'`.
fn sandwich_parts(fit: &SandwichFit, data: &ModelData, family: &Family) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let design = data.full_design();
    let k = design.ncols();
    if fit.beta_hat.len() != k {
        return Err(Error::InvalidData(format!("{} coefficients for {k} design columns", fit.beta_hat.len())));
    }
    let eta = &design * &fit.beta_hat + &data.offset;
    let mu = family.inverse_link(&eta);
    let mu_eta = family.mean_derivative(&eta);

    let mut bread = DMatrix::zeros(k, k);
    let mut meat = DMatrix::zeros(k, k);
    for members in fit.clusters.blocks() {
        let mut u = DVector::zeros(k);
        for &i in members {
            let v = family.variance(family.clamp_mu(mu[i]), fit.dispersion);
            let row = design.row(i).transpose();
            let d = mu_eta[i];
            bread.ger(d * d / v, &row, &row, 1.0);
            u.axpy(d * (data.y[i] - mu[i]) / v, &row, 1.0);
        }
        meat.ger(1.0, &u, &u, 1.0);
    }
    let bread_inv = factor_gram(&bread).map_err(|_| Error::SingularBread)?.inverse();
    let sandwich = &bread_inv * meat * &bread_inv;
    Ok((bread_inv, sandwich))
}

/// Cluster-robust covariance `W0^{-1} W1 W0^{-1}` of `fit.beta_hat`.
pub fn sandwich_variance(fit: &SandwichFit, data: &ModelData, family: &Family) -> Result<DMatrix<f64>> {
    if fit.clusters.n() != data.n() {
        return Err(Error::InvalidData("cluster structure does not match data".into()));
    }
    Ok(sandwich_parts(fit, data, family)?.1)
}

/// Wald test of coefficient `column` with the sandwich standard error.
pub fn gee_wald_test(fit: &SandwichFit, column: usize) -> Result<WaldResult> {
    let k = fit.beta_hat.len();
    if column >= k {
        return Err(Error::ColumnOutOfRange { index: column, len: k });
    }
    let robust = fit.sandwich_variance[(column, column)];
    // |z| beyond 1e10 (or an SE far below the model SE) is roundoff from an
    // exact fit
    let scale = fit.model_variance[(column, column)].max(fit.beta_hat[column].powi(2));
    if !(robust > 1e-20 * scale) {
        return Err(Error::DegenerateVariance { variance: robust });
    }
    WaldResult::from_estimate(fit.beta_hat[column], robust, fit.converged)
}
