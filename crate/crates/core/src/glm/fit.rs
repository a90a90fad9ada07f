use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::hat::factor_gram;
use crate::glm::{Dispersion, Family, ModelData};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsConfig {
    /// Bound on `|dev - dev_old| / (|dev| + 0.1)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// Result of an IRLS fit of `g(mu) = design * coef + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub coefficients: DVector<f64>,
    pub eta: DVector<f64>,
    pub mu: DVector<f64>,
    /// `d mu / d eta` at the fitted linear predictor.
    pub mu_eta: DVector<f64>,
    pub w_diag: DVector<f64>,
    pub v_diag: DVector<f64>,
    pub dispersion: f64,
    pub converged: bool,
    /// Some fitted mean sits on the clamp boundary (separation).
    pub boundary: bool,
    pub iterations: usize,
    pub deviance: f64,
}

/// Fits a GLM by iteratively reweighted least squares.
///
/// Non-convergence and separation are reported through `converged` and
/// `boundary`, never as errors. A rank-deficient weighted Gram matrix is an
/// error.
pub fn fit_glm(
    y: &DVector<f64>,
    design: &DMatrix<f64>,
    offset: &DVector<f64>,
    family: &Family,
    config: &IrlsConfig,
) -> Result<GlmFit> {
    let n = y.len();
    let k = design.ncols();
    family.validate_response(y)?;

    let mu0 = y.map(|v| family.initial_mu(v));
    let mut eta = family.link(&mu0);
    let mut mu = mu0;
    let mut dev_old = family.deviance(y, &mu);
    let mut coef: Option<DVector<f64>> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let d = family.mean_derivative(&eta);
        let mut w = DVector::zeros(n);
        let mut work = DVector::zeros(n);
        for i in 0..n {
            let v = family.variance(family.clamp_mu(mu[i]), 1.0);
            w[i] = d[i] * d[i] / v;
            work[i] = (eta[i] - offset[i]) + (y[i] - mu[i]) / d[i];
        }
        let (gram, rhs) = weighted_normal_equations(design, &w, &work);
        let chol = factor_gram(&gram)?;
        let mut next = chol.solve(&rhs);

        let (mut eta_new, mut mu_new, mut dev) = evaluate(design, &next, offset, family, y);
        if let Some(prev) = &coef {
            let mut halvings = 0;
            while (!dev.is_finite() || dev > dev_old * (1.0 + 1e-12) + 1e-12) && halvings < MAX_HALVINGS {
                next = (&next + prev) * 0.5;
                (eta_new, mu_new, dev) = evaluate(design, &next, offset, family, y);
                halvings += 1;
            }
        }
        if !dev.is_finite() {
            break;
        }
        eta = eta_new;
        mu = mu_new;
        coef = Some(next);
        let change = (dev - dev_old).abs() / (dev.abs() + 0.1);
        dev_old = dev;
        if change < config.tol {
            converged = true;
            break;
        }
    }

    let coefficients = coef.unwrap_or_else(|| DVector::zeros(k));
    let boundary = mu.iter().any(|&m| family.on_boundary(m));
    let dispersion = match family.dispersion {
        Dispersion::Fixed(phi) => phi,
        Dispersion::Estimated => {
            let rss: f64 = y.iter().zip(mu.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            let phi = rss / (n - k) as f64;
            // exact fits carry no scale information; any positive value gives
            // the same statistics
            if phi > 0.0 && phi.is_finite() { phi } else { 1.0 }
        }
    };
    let mu_eta = family.mean_derivative(&eta);
    let v_diag = mu.map(|m| family.variance(family.clamp_mu(m), dispersion));
    let w_diag = mu_eta.zip_map(&v_diag, |d, v| d * d / v);

    Ok(GlmFit {
        coefficients,
        eta,
        mu,
        mu_eta,
        w_diag,
        v_diag,
        dispersion,
        converged: converged && !boundary,
        boundary,
        iterations,
        deviance: dev_old,
    })
}

fn weighted_normal_equations(
    design: &DMatrix<f64>,
    w: &DVector<f64>,
    work: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut scaled = design.clone();
    for (i, &wi) in w.iter().enumerate() {
        scaled.row_mut(i).scale_mut(wi.sqrt());
    }
    let sw_work = work.zip_map(w, |z, wi| z * wi.sqrt());
    (scaled.tr_mul(&scaled), scaled.tr_mul(&sw_work))
}

fn evaluate(
    design: &DMatrix<f64>,
    coef: &DVector<f64>,
    offset: &DVector<f64>,
    family: &Family,
    y: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, f64) {
    let eta = design * coef + offset;
    let mu = family.inverse_link(&eta);
    let dev = family.deviance(y, &mu);
    (eta, mu, dev)
}

/// IRLS fit of the model under the null hypothesis: `g(mu) = Z gamma + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullFit {
    pub gamma_hat: DVector<f64>,
    pub eta: DVector<f64>,
    pub mu: DVector<f64>,
    pub mu_eta: DVector<f64>,
    pub w_diag: DVector<f64>,
    pub v_diag: DVector<f64>,
    pub dispersion: f64,
    pub converged: bool,
    pub boundary: bool,
    pub iterations: usize,
    pub deviance: f64,
    /// Response the fit was computed from.
    pub y: DVector<f64>,
    /// Nuisance design the fit was computed from.
    pub z: DMatrix<f64>,
    pub family: Family,
}

impl NullFit {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn residuals(&self) -> DVector<f64> {
        &self.y - &self.mu
    }
}

pub fn fit_null(data: &ModelData, family: &Family, tol: f64, max_iter: usize) -> Result<NullFit> {
    data.validate(family)?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidData("IRLS needs tol > 0 and max_iter >= 1".into()));
    }
    let fit = fit_glm(&data.y, &data.z, &data.offset, family, &IrlsConfig { tol, max_iter })?;
    Ok(NullFit {
        gamma_hat: fit.coefficients,
        eta: fit.eta,
        mu: fit.mu,
        mu_eta: fit.mu_eta,
        w_diag: fit.w_diag,
        v_diag: fit.v_diag,
        dispersion: fit.dispersion,
        converged: fit.converged,
        boundary: fit.boundary,
        iterations: fit.iterations,
        deviance: fit.deviance,
        y: data.y.clone(),
        z: data.z.clone(),
        family: *family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn intercept_data(y: &[f64]) -> ModelData {
        let n = y.len();
        ModelData::new(
            DVector::from_column_slice(y),
            DMatrix::from_fn(n, 1, |i, _| i as f64),
            DMatrix::from_element(n, 1, 1.0),
            (0..n as u64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_intercept_is_the_mean() {
        let fit = fit_null(&intercept_data(&[1.0, 2.0, 3.0]), &Family::gaussian(), 1e-8, 50).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.gamma_hat[0], 2.0, epsilon = 1e-12);
        for m in fit.mu.iter() {
            assert_abs_diff_eq!(*m, 2.0, epsilon = 1e-12);
        }
        // Pearson dispersion with n - q = 2
        assert_abs_diff_eq!(fit.dispersion, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_intercept_is_logit_of_proportion() {
        let fit = fit_null(&intercept_data(&[0.0, 0.0, 1.0, 1.0]), &Family::binomial(), 1e-8, 50).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.gamma_hat[0], 0.0, epsilon = 1e-10);
        for m in fit.mu.iter() {
            assert_abs_diff_eq!(*m, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn poisson_intercept_is_log_mean() {
        let fit = fit_null(&intercept_data(&[1.0, 3.0]), &Family::poisson(), 1e-8, 50).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.gamma_hat[0], 2f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(fit.mu[0], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn weights_match_family_functions() {
        let y = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let mut data = intercept_data(&y);
        data.z = DMatrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { (i as f64 * 0.7).sin() });
        let fam = Family::binomial();
        let fit = fit_null(&data, &fam, 1e-8, 50).unwrap();
        let d = fam.mean_derivative(&fit.eta);
        let clamped = fit.mu.map(|m| fam.clamp_mu(m));
        let v = fam.variance_function(&clamped, fit.dispersion).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(fit.w_diag[i], d[i] * d[i] / v[i], epsilon = 1e-12);
            assert_abs_diff_eq!(fit.mu[i], fam.mean(fit.eta[i]), epsilon = 0.0);
        }
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let mut data = intercept_data(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        data.z = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let fit = fit_null(&data, &Family::binomial(), 1e-8, 50).unwrap();
        assert!(!fit.converged);
        assert!(fit.boundary);
    }

    #[test]
    fn rank_deficient_design_errors() {
        let mut data = intercept_data(&[0.0, 1.0, 1.0, 0.0]);
        data.z = DMatrix::from_fn(4, 2, |_, j| if j == 0 { 1.0 } else { 3.0 });
        assert_eq!(fit_null(&data, &Family::binomial(), 1e-8, 50).unwrap_err(), Error::SingularDesign);
    }

    #[test]
    fn invalid_response_errors() {
        let data = intercept_data(&[0.0, 2.0, 1.0]);
        assert!(matches!(fit_null(&data, &Family::binomial(), 1e-8, 50), Err(Error::InvalidData(_))));
    }

    #[test]
    fn fit_is_deterministic() {
        let y = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let mut data = intercept_data(&y);
        data.z = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { (i as f64).cos() });
        let a = fit_null(&data, &Family::binomial(), 1e-8, 50).unwrap();
        let b = fit_null(&data, &Family::binomial(), 1e-8, 50).unwrap();
        assert_eq!(a, b);
    }
}
