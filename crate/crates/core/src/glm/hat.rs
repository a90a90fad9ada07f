use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Smallest pivot accepted when factoring a unit-diagonal Gram matrix.
const RANK_TOL: f64 = 1e-11;

/// Cholesky factor of a symmetric positive definite Gram matrix.
///
/// Rank is judged on the diagonally rescaled matrix so that columns on very
/// different scales are not mistaken for collinear ones.
pub(crate) fn factor_gram(gram: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let q = gram.nrows();
    let mut scaled = gram.clone();
    for i in 0..q {
        if !(gram[(i, i)] > 0.0) || !gram[(i, i)].is_finite() {
            return Err(Error::SingularDesign);
        }
    }
    for i in 0..q {
        for j in 0..q {
            scaled[(i, j)] = gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt();
        }
    }
    let probe = Cholesky::new(scaled).ok_or(Error::SingularDesign)?;
    let l = probe.l_dirty();
    if (0..q).any(|i| l[(i, i)] * l[(i, i)] < RANK_TOL) {
        return Err(Error::SingularDesign);
    }
    Cholesky::new(gram.clone()).ok_or(Error::SingularDesign)
}

/// The projection `H = W^{1/2} Z (Z'WZ)^{-1} Z' W^{1/2}` held implicitly.
///
/// With `G = W^{1/2} Z` and `G'G = L L'`, `v'Hv = |L^{-1} G'v|^2`.
#[derive(Debug, Clone)]
pub struct WeightedProjector {
    g: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl WeightedProjector {
    pub fn new(z: &DMatrix<f64>, w_diag: &DVector<f64>) -> Result<Self> {
        assert_eq!(z.nrows(), w_diag.len(), "weights must match design rows");
        if w_diag.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::SingularDesign);
        }
        let mut g = z.clone();
        for (i, &w) in w_diag.iter().enumerate() {
            let s = w.sqrt();
            g.row_mut(i).scale_mut(s);
        }
        let gram = g.tr_mul(&g);
        let factor = factor_gram(&gram)?;
        Ok(Self { g, factor })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn rank(&self) -> usize {
        self.g.ncols()
    }

    /// `W^{1/2} Z`.
    pub fn sqrt_w_design(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `L^{-1} u` for a length-q vector `u`.
    pub fn whiten(&self, u: &DVector<f64>) -> DVector<f64> {
        self.factor
            .l_dirty()
            .solve_lower_triangular(u)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L^{-1} G' v`, so that `v'Hv` is its squared norm.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.whiten(&self.g.tr_mul(v))
    }

    /// `H v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let coef = self.factor.solve(&self.g.tr_mul(v));
        &self.g * coef
    }

    /// `(I - H) v`.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project(v)
    }

    /// Dense `H`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let inv_gt = self.factor.solve(&self.g.transpose());
        &self.g * inv_gt
    }
}

/// `(D' W D)^{-1}` for design `d` and weights `w_diag`.
pub fn weighted_gram_inverse(d: &DMatrix<f64>, w_diag: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut g = d.clone();
    for (i, &w) in w_diag.iter().enumerate() {
        g.row_mut(i).scale_mut(w.sqrt());
    }
    Ok(factor_gram(&g.tr_mul(&g))?.inverse())
}

/// Dense weighted hat matrix for design `z` and working weights `w_diag`.
pub fn hat_projection(z: &DMatrix<f64>, w_diag: &DVector<f64>) -> Result<DMatrix<f64>> {
    Ok(WeightedProjector::new(z, w_diag)?.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_projection() {
        let h = hat_projection(&DMatrix::from_element(4, 1, 1.0), &DVector::from_element(4, 1.0)).unwrap();
        for v in h.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn full_span_is_identity() {
        let z = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 1.0, -1.0, 3.0, 1.0, 0.5, 0.5]);
        let h = hat_projection(&z, &DVector::from_vec(vec![0.3, 2.0, 1.1])).unwrap();
        assert!((h - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn random_instance_is_idempotent() {
        let z = DMatrix::from_row_slice(6, 2, &[
            1.0, 0.3, 1.0, -1.2, 1.0, 0.8, 1.0, 2.1, 1.0, -0.4, 1.0, 0.05,
        ]);
        let w = DVector::from_vec(vec![0.2, 0.25, 0.1, 0.05, 0.22, 0.19]);
        let h = hat_projection(&z, &w).unwrap();
        assert!((&h * &h - &h).amax() < 1e-10);
    }

    #[test]
    fn collinear_design_is_singular() {
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let err = hat_projection(&z, &DVector::from_element(4, 1.0)).unwrap_err();
        assert_eq!(err, Error::SingularDesign);
    }

    proptest! {
        #[test]
        fn projection_properties(
            entries in prop::collection::vec(-3.0f64..3.0, 24),
            weights in prop::collection::vec(0.05f64..4.0, 8),
        ) {
            let mut z = DMatrix::from_column_slice(8, 3, &entries);
            z.column_mut(0).fill(1.0);
            let w = DVector::from_vec(weights);
            if let Ok(h) = hat_projection(&z, &w) {
                prop_assert!((&h - h.transpose()).amax() < 1e-8);
                prop_assert!((&h * &h - &h).amax() < 1e-8);
                prop_assert!((h.trace() - 3.0).abs() < 1e-8);
            }
        }
    }
}
