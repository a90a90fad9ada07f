use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::{NullFit, WeightedProjector};

/// Relative norm below which a tested column counts as lying in span(Z).
const CONTRAST_TOL: f64 = 1e-10;
/// Relative size below which a flip variance counts as zero.
pub(crate) const VARIANCE_TOL: f64 = 1e-12;

/// Per-observation effective-score contributions.
///
/// Row `k` of `a` is `x_k' W^{1/2} (I - H) V^{-1/2}`; `contributions[(k, i)]`
/// is `a[(k, i)] * r[i]`, so `n^{-1/2}` times a row sum is the observed
/// effective score of column `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDecomposition {
    pub a: DMatrix<f64>,
    pub r: DVector<f64>,
    pub contributions: DMatrix<f64>,
}

impl ScoreDecomposition {
    /// Wraps precomputed contributions (one row per column); `a` is set to
    /// the contributions and `r` to ones.
    pub fn from_contributions(contributions: DMatrix<f64>) -> Self {
        let n = contributions.ncols();
        Self { a: contributions.clone(), r: DVector::from_element(n, 1.0), contributions }
    }

    pub fn n(&self) -> usize {
        self.contributions.ncols()
    }

    pub fn num_columns(&self) -> usize {
        self.contributions.nrows()
    }

    /// Observed effective score of `column`.
    pub fn observed(&self, column: usize) -> f64 {
        self.contributions.row(column).sum() / (self.n() as f64).sqrt()
    }
}

/// `(I - H) W^{1/2} x` for every column of `x`, with the collinearity check.
pub(crate) fn projected_columns(
    projector: &WeightedProjector,
    w_diag: &DVector<f64>,
    x: &DMatrix<f64>,
) -> Result<Vec<DVector<f64>>> {
    let sqrt_w = w_diag.map(f64::sqrt);
    (0..x.ncols())
        .map(|k| {
            let u = x.column(k).component_mul(&sqrt_w);
            let b = projector.residual(&u);
            let scale = u.norm();
            if scale == 0.0 || b.norm() < CONTRAST_TOL * scale {
                return Err(Error::DegenerateContrast { column: k });
            }
            Ok(b)
        })
        .collect()
}

/// Effective-score contributions of every column of `x` under `fit`.
pub fn score_decomposition(fit: &NullFit, x: &DMatrix<f64>) -> Result<ScoreDecomposition> {
    if !fit.converged {
        return Err(Error::NonConvergence { iterations: fit.iterations });
    }
    if x.nrows() != fit.n() {
        return Err(Error::InvalidData(format!("x has {} rows, fit has {}", x.nrows(), fit.n())));
    }
    let projector = WeightedProjector::new(&fit.z, &fit.w_diag)?;
    let b = projected_columns(&projector, &fit.w_diag, x)?;
    let inv_sqrt_v = fit.v_diag.map(|v| 1.0 / v.sqrt());
    let r = fit.residuals();
    let n = fit.n();
    let mut a = DMatrix::zeros(x.ncols(), n);
    for (k, bk) in b.iter().enumerate() {
        for i in 0..n {
            a[(k, i)] = bk[i] * inv_sqrt_v[i];
        }
    }
    let mut contributions = a.clone();
    for k in 0..x.ncols() {
        for i in 0..n {
            contributions[(k, i)] *= r[i];
        }
    }
    Ok(ScoreDecomposition { a, r, contributions })
}

/// `n^{-1/2} sum_i signs_i * contributions[column, i]`.
pub fn flipped_score(decomp: &ScoreDecomposition, signs: &[f64], column: usize) -> f64 {
    assert_eq!(signs.len(), decomp.n(), "sign vector length");
    let row = decomp.contributions.row(column);
    let s: f64 = row.iter().zip(signs).map(|(c, s)| c * s).sum();
    s / (decomp.n() as f64).sqrt()
}

/// Leading term of `var{S(F)}`:
/// `n^{-1} x' W^{1/2} (I-H) F (I-H) F (I-H) W^{1/2} x`.
pub fn flip_variance(x: &DMatrix<f64>, fit: &NullFit, signs: &[f64], column: usize) -> Result<f64> {
    let n = fit.n();
    assert_eq!(signs.len(), n, "sign vector length");
    if column >= x.ncols() {
        return Err(Error::ColumnOutOfRange { index: column, len: x.ncols() });
    }
    let projector = WeightedProjector::new(&fit.z, &fit.w_diag)?;
    let sqrt_w = fit.w_diag.map(f64::sqrt);
    let b = projector.residual(&x.column(column).component_mul(&sqrt_w));
    let c = DVector::from_iterator(n, b.iter().zip(signs).map(|(v, s)| v * s));
    let hc = projector.coordinates(&c).norm_squared();
    let variance = (c.norm_squared() - hc) / n as f64;
    let scale = b.norm_squared() / n as f64;
    if !(variance > VARIANCE_TOL * scale) {
        return Err(Error::DegenerateVariance { variance });
    }
    Ok(variance)
}

/// `score / variance^{1/2}`.
pub fn standardized_score(score: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::DegenerateVariance { variance });
    }
    Ok(score / variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::{fit_null, Family, ModelData};

    fn gaussian_fit(y: Vec<f64>, x: Vec<f64>) -> (NullFit, DMatrix<f64>) {
        let n = y.len();
        let x = DMatrix::from_vec(n, 1, x);
        let data = ModelData::new(
            DVector::from_vec(y),
            x.clone(),
            DMatrix::from_element(n, 1, 1.0),
            (0..n as u64).collect(),
        )
        .unwrap();
        (fit_null(&data, &Family::gaussian(), 1e-10, 50).unwrap(), x)
    }

    #[test]
    fn zero_residuals_give_zero_contributions() {
        let (fit, x) = gaussian_fit(vec![2.0; 5], vec![1.0, 4.0, 2.0, 0.0, 3.0]);
        let d = score_decomposition(&fit, &x).unwrap();
        assert!(d.contributions.iter().all(|&c| c == 0.0));
        assert_eq!(flipped_score(&d, &[1.0, -1.0, 1.0, -1.0, -1.0], 0), 0.0);
    }

    #[test]
    fn column_in_nuisance_span_is_degenerate() {
        let (fit, _) = gaussian_fit(vec![1.0, 3.0, 2.0, 5.0], vec![0.0; 4]);
        let ones = DMatrix::from_element(4, 1, 1.0);
        assert_eq!(score_decomposition(&fit, &ones).unwrap_err(), Error::DegenerateContrast { column: 0 });
        assert!(matches!(flip_variance(&ones, &fit, &[1.0; 4], 0), Err(Error::DegenerateVariance { .. })));
    }

    #[test]
    fn gaussian_intercept_contributions_are_centered_x() {
        let xs = vec![0.5, -1.0, 2.0, 0.0, 1.5, 3.0];
        let (fit, x) = gaussian_fit(vec![1.0, 0.0, 4.0, 1.0, 2.0, 2.5], xs.clone());
        let d = score_decomposition(&fit, &x).unwrap();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let ratio = d.a[(0, 0)] / (xs[0] - mean);
        for i in 0..6 {
            assert!((d.a[(0, i)] - ratio * (xs[i] - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_symmetry_of_flipped_score() {
        let (fit, x) = gaussian_fit(vec![1.0, 0.0, 4.0, 1.0, 2.0, 2.5], vec![0.5, -1.0, 2.0, 0.0, 1.5, 3.0]);
        let d = score_decomposition(&fit, &x).unwrap();
        let s = flipped_score(&d, &[1.0; 6], 0);
        assert!((s - d.observed(0)).abs() < 1e-14);
        assert_eq!(flipped_score(&d, &[-1.0; 6], 0), -s);
    }

    #[test]
    fn standardization() {
        assert_eq!(standardized_score(2.0, 4.0).unwrap(), 1.0);
        assert_eq!(standardized_score(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(standardized_score(-3.0, 9.0).unwrap(), -1.0);
        assert!(standardized_score(1.0, 0.0).is_err());
        assert!(standardized_score(1.0, -1.0).is_err());
    }

    #[test]
    fn unconverged_fit_is_rejected() {
        let (mut fit, x) = gaussian_fit(vec![1.0, 0.0, 4.0], vec![0.5, -1.0, 2.0]);
        fit.converged = false;
        assert!(matches!(score_decomposition(&fit, &x), Err(Error::NonConvergence { .. })));
    }
}
