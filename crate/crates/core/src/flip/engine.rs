use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flip::pvalue::{compute_pvalue, Alternative};
use crate::flip::score::{projected_columns, VARIANCE_TOL};
use crate::flip::{BlockStructure, FlipPlan};
use crate::glm::{fit_null, Family, ModelData, NullFit, WeightedProjector, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Block-aggregated pieces of the flipped score and its variance for one
/// tested column.
///
/// With `b = (I-H) W^{1/2} x`, `S(F) = n^{-1/2} sum_j s_j c_j` where `c_j` is
/// the block sum of contributions, and
/// `n var{S(F)} = |b|^2 - |L^{-1} sum_j s_j G_j' b_j|^2`.
#[derive(Debug, Clone)]
struct ColumnKernel {
    block_scores: Vec<f64>,
    block_coords: DMatrix<f64>,
    b_norm2: f64,
}

#[derive(Debug, Clone)]
struct FlipKernel {
    n: usize,
    columns: Vec<ColumnKernel>,
}

impl FlipKernel {
    fn new(
        projector: &WeightedProjector,
        b: &[DVector<f64>],
        contributions: &DMatrix<f64>,
        blocks: &BlockStructure,
    ) -> Self {
        let g = projector.sqrt_w_design();
        let q = g.ncols();
        let nb = blocks.num_blocks();
        let columns = b
            .iter()
            .enumerate()
            .map(|(k, bk)| {
                let mut block_scores = vec![0.0; nb];
                let mut raw = DMatrix::zeros(q, nb);
                for (j, members) in blocks.blocks().iter().enumerate() {
                    for &i in members {
                        block_scores[j] += contributions[(k, i)];
                        for c in 0..q {
                            raw[(c, j)] += g[(i, c)] * bk[i];
                        }
                    }
                }
                let mut block_coords = DMatrix::zeros(q, nb);
                for j in 0..nb {
                    let col = projector.whiten(&raw.column(j).into_owned());
                    block_coords.set_column(j, &col);
                }
                ColumnKernel { block_scores, block_coords, b_norm2: bk.norm_squared() }
            })
            .collect();
        Self { n: blocks.n(), columns }
    }

    fn score(&self, k: usize, block_signs: &[f64]) -> f64 {
        let s: f64 = self.columns[k].block_scores.iter().zip(block_signs).map(|(c, s)| c * s).sum();
        s / (self.n as f64).sqrt()
    }

    fn variance(&self, k: usize, block_signs: &[f64]) -> f64 {
        let col = &self.columns[k];
        let signs = DVector::from_column_slice(block_signs);
        let m = &col.block_coords * signs;
        (col.b_norm2 - m.norm_squared()) / self.n as f64
    }

    fn variance_floor(&self, k: usize) -> f64 {
        VARIANCE_TOL * self.columns[k].b_norm2 / self.n as f64
    }
}

/// Outcome of a sign-flip score test of one tested column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipTestResult {
    /// Column of `ModelData::x` that was tested.
    pub column: usize,
    /// Observed effective score `S(I)`.
    pub score: f64,
    /// `var{S(I)}^{1/2}`.
    pub std_error: f64,
    /// `S(I) / std_error`, the observed standardized statistic.
    pub z_value: f64,
    /// `z_value / sqrt(n)`.
    pub partial_cor: f64,
    /// Standardized statistics of all flips, identity first.
    pub flipped: Vec<f64>,
    pub p_value: f64,
    pub alternative: Alternative,
    /// Non-identity flips whose variance degenerated (statistic set to 0).
    pub degenerate_flips: usize,
    pub n: usize,
}

impl FlipTestResult {
    pub fn observed(&self) -> f64 {
        self.flipped[0]
    }

    pub fn num_flips(&self) -> usize {
        self.flipped.len()
    }
}

/// Outcome of a multi-column (term) test sharing one flip set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiDfResult {
    pub columns: Vec<usize>,
    pub df: usize,
    /// Observed `T = sum_k S*_k^2`.
    pub statistic: f64,
    /// `T` for every flip, identity first.
    pub combined: Vec<f64>,
    pub p_value: f64,
    /// Per-column two-sided results under the term's null model.
    pub per_column: Vec<FlipTestResult>,
}

fn evaluate(
    data: &ModelData,
    family: &Family,
    plan: &FlipPlan,
    columns: &[usize],
    alternative: Alternative,
) -> Result<Vec<FlipTestResult>> {
    plan.validate()?;
    data.validate(family)?;
    if plan.blocks.n() != data.n() {
        return Err(Error::InvalidPlan(format!(
            "plan covers {} observations, data has {}",
            plan.blocks.n(),
            data.n()
        )));
    }
    let reduced = data.with_tested(columns)?;
    let fit = fit_null(&reduced, family, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    evaluate_fit(&fit, &reduced.x, plan, columns, alternative)
}

fn evaluate_fit(
    fit: &NullFit,
    x: &DMatrix<f64>,
    plan: &FlipPlan,
    columns: &[usize],
    alternative: Alternative,
) -> Result<Vec<FlipTestResult>> {
    if !fit.converged {
        return Err(Error::NonConvergence { iterations: fit.iterations });
    }
    let n = fit.n();
    let projector = WeightedProjector::new(&fit.z, &fit.w_diag)?;
    let b = projected_columns(&projector, &fit.w_diag, x).map_err(|e| match e {
        Error::DegenerateContrast { column } => Error::DegenerateContrast { column: columns[column] },
        other => other,
    })?;
    let r = fit.residuals();
    let mut contributions = DMatrix::zeros(columns.len(), n);
    for (k, bk) in b.iter().enumerate() {
        for i in 0..n {
            contributions[(k, i)] = bk[i] / fit.v_diag[i].sqrt() * r[i];
        }
    }
    let kernel = FlipKernel::new(&projector, &b, &contributions, &plan.blocks);
    let p = columns.len();

    let identity = plan.block_signs(0);
    let mut observed = Vec::with_capacity(p);
    for k in 0..p {
        let v = kernel.variance(k, &identity);
        if !(v > kernel.variance_floor(k)) {
            return Err(Error::DegenerateVariance { variance: v });
        }
        observed.push((kernel.score(k, &identity), v));
    }

    // row w holds (S*_k, degenerate_k) for every column
    let rows: Vec<Vec<(f64, bool)>> = (0..plan.num_flips)
        .into_par_iter()
        .map(|w| {
            let signs = plan.block_signs(w);
            (0..p)
                .map(|k| {
                    if w == 0 {
                        let (s, v) = observed[k];
                        return (s / v.sqrt(), false);
                    }
                    let v = kernel.variance(k, &signs);
                    if v > kernel.variance_floor(k) {
                        (kernel.score(k, &signs) / v.sqrt(), false)
                    } else {
                        (0.0, true)
                    }
                })
                .collect()
        })
        .collect();

    let results = (0..p)
        .map(|k| {
            let flipped: Vec<f64> = rows.iter().map(|row| row[k].0).collect();
            let degenerate_flips = rows.iter().filter(|row| row[k].1).count();
            let (score, variance) = observed[k];
            let std_error = variance.sqrt();
            let z_value = flipped[0];
            FlipTestResult {
                column: columns[k],
                score,
                std_error,
                z_value,
                partial_cor: z_value / (n as f64).sqrt(),
                p_value: compute_pvalue(z_value, &flipped, alternative),
                flipped,
                alternative,
                degenerate_flips,
                n,
            }
        })
        .collect();
    Ok(results)
}

/// Sign-flip score test of column `column` of `data.x`.
///
/// The null model contains `data.z` and every other column of `data.x`.
pub fn flip_test(
    data: &ModelData,
    family: &Family,
    plan: &FlipPlan,
    alternative: Alternative,
    column: usize,
) -> Result<FlipTestResult> {
    let mut out = evaluate(data, family, plan, &[column], alternative)?;
    Ok(out.remove(0))
}

/// Joint test of several columns of `data.x` with
/// `T_w = sum_k S*_k(F_w)^2` and `p = #{w : T_w >= T_1} / W`.
pub fn multi_df_test(
    data: &ModelData,
    family: &Family,
    plan: &FlipPlan,
    columns: &[usize],
) -> Result<MultiDfResult> {
    let mut sorted = columns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != columns.len() {
        return Err(Error::InvalidData("duplicate columns in term".into()));
    }
    let per_column = evaluate(data, family, plan, columns, Alternative::TwoSided)?;
    let combined: Vec<f64> = (0..plan.num_flips)
        .map(|w| per_column.iter().map(|r| r.flipped[w] * r.flipped[w]).sum())
        .collect();
    let statistic = combined[0];
    let p_value = compute_pvalue(statistic, &combined, Alternative::Greater);
    Ok(MultiDfResult { columns: columns.to_vec(), df: columns.len(), statistic, combined, p_value, per_column })
}
