use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::Family;

/// Response, tested design `x`, nuisance design `z`, cluster labels and
/// offset for one analysis.
///
/// Cluster labels are opaque integers; the CSV reader interns string ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub cluster: Vec<u64>,
    pub offset: DVector<f64>,
}

impl ModelData {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, z: DMatrix<f64>, cluster: Vec<u64>) -> Result<Self> {
        let n = y.len();
        let offset = DVector::zeros(n);
        let data = Self { y, x, z, cluster, offset };
        data.check_shapes()?;
        Ok(data)
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Result<Self> {
        self.offset = offset;
        self.check_shapes()?;
        Ok(self)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::InvalidData("no observations".into()));
        }
        let rows = [
            ("x", self.x.nrows()),
            ("z", self.z.nrows()),
            ("cluster", self.cluster.len()),
            ("offset", self.offset.len()),
        ];
        for (name, r) in rows {
            if r != n {
                return Err(Error::InvalidData(format!("{name} has {r} rows, response has {n}")));
            }
        }
        if self.x.ncols() == 0 {
            return Err(Error::InvalidData("no tested columns".into()));
        }
        if self.z.ncols() >= n {
            return Err(Error::InvalidData(format!(
                "nuisance design has {} columns for {n} observations",
                self.z.ncols()
            )));
        }
        let finite = self.x.iter().chain(self.z.iter()).chain(self.offset.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidData("design contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Shape and response checks for `family`. Rank is checked when fitting.
    pub fn validate(&self, family: &Family) -> Result<()> {
        self.check_shapes()?;
        family.validate_response(&self.y)
    }

    /// Keeps `columns` of `x` as the tested design and appends every other
    /// column of `x` to the nuisance design.
    pub fn with_tested(&self, columns: &[usize]) -> Result<Self> {
        let p = self.x.ncols();
        if columns.is_empty() {
            return Err(Error::InvalidData("no tested columns selected".into()));
        }
        for &c in columns {
            if c >= p {
                return Err(Error::ColumnOutOfRange { index: c, len: p });
            }
        }
        let rest: Vec<usize> = (0..p).filter(|c| !columns.contains(c)).collect();
        let x = self.x.select_columns(columns);
        let extra = self.x.select_columns(&rest);
        let mut z = DMatrix::zeros(self.n(), self.z.ncols() + extra.ncols());
        z.columns_mut(0, self.z.ncols()).copy_from(&self.z);
        z.columns_mut(self.z.ncols(), extra.ncols()).copy_from(&extra);
        let out = Self { y: self.y.clone(), x, z, cluster: self.cluster.clone(), offset: self.offset.clone() };
        out.check_shapes()?;
        Ok(out)
    }

    /// `[x | z]`, the design of the full model.
    pub fn full_design(&self) -> DMatrix<f64> {
        let (p, q) = (self.x.ncols(), self.z.ncols());
        let mut m = DMatrix::zeros(self.n(), p + q);
        m.columns_mut(0, p).copy_from(&self.x);
        m.columns_mut(p, q).copy_from(&self.z);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_mismatch_is_rejected() {
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let x = DMatrix::from_element(3, 1, 1.0);
        let z = DMatrix::from_element(2, 1, 1.0);
        assert!(ModelData::new(y.clone(), x.clone(), z, vec![1, 2, 3]).is_err());
        let z = DMatrix::from_element(3, 1, 1.0);
        assert!(ModelData::new(y.clone(), x.clone(), z.clone(), vec![1, 2]).is_err());
        let d = ModelData::new(y, x, z, vec![1, 2, 3]).unwrap();
        assert!(d.with_offset(DVector::zeros(4)).is_err());
    }

    #[test]
    fn with_tested_moves_other_columns_to_nuisance() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let x = DMatrix::from_row_slice(4, 3, &[
            1.0, 10.0, 100.0,
            2.0, 20.0, 200.0,
            3.0, 30.0, 300.0,
            4.0, 40.0, 401.0,
        ]);
        let z = DMatrix::from_element(4, 1, 1.0);
        let d = ModelData::new(y, x, z, vec![0, 0, 1, 1]).unwrap();
        let t = d.with_tested(&[1]).unwrap();
        assert_eq!(t.x.column(0).as_slice(), &[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(t.z.ncols(), 3);
        assert_eq!(t.z.column(1).as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.z.column(2)[3], 401.0);
        assert!(matches!(d.with_tested(&[3]), Err(Error::ColumnOutOfRange { .. })));
    }
}
