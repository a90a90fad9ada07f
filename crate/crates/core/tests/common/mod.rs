//! Dense reference computations for the integration tests.
//!
//! Everything here works with explicit n x n matrices and LU inverses so it
//! shares no code path with the implicit projector used by the library.
#![allow(dead_code)]

use flipscore::glm::{Family, FamilyKind, ModelData, NullFit};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle matrix is invertible")
}

fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// `W^{1/2} Z (Z'WZ)^{-1} Z' W^{1/2}`.
pub fn dense_hat(z: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let sw = diag(&w.map(f64::sqrt));
    let ww = diag(w);
    &sw * z * inv(&(z.transpose() * ww * z)) * z.transpose() * &sw
}

/// `n^{-1/2} x' W^{1/2} (I - H) V^{-1/2} F (y - mu)`.
pub fn dense_score(x: &DVector<f64>, fit: &NullFit, signs: &[f64]) -> f64 {
    let n = fit.n();
    let h = dense_hat(&fit.z, &fit.w_diag);
    let i_h = DMatrix::identity(n, n) - h;
    let sw = diag(&fit.w_diag.map(f64::sqrt));
    let v_inv_sqrt = diag(&fit.v_diag.map(|v| 1.0 / v.sqrt()));
    let f = diag(&DVector::from_column_slice(signs));
    let r = &fit.y - &fit.mu;
    let s = x.transpose() * sw * i_h * v_inv_sqrt * f * r;
    s[(0, 0)] / (n as f64).sqrt()
}

/// `n^{-1} x' W^{1/2} (I-H) F (I-H) F (I-H) W^{1/2} x`.
pub fn dense_variance(x: &DVector<f64>, fit: &NullFit, signs: &[f64]) -> f64 {
    let n = fit.n();
    let h = dense_hat(&fit.z, &fit.w_diag);
    let i_h = DMatrix::identity(n, n) - h;
    let sw = diag(&fit.w_diag.map(f64::sqrt));
    let f = diag(&DVector::from_column_slice(signs));
    let m = x.transpose() * &sw * &i_h * &f * &i_h * &f * &i_h * &sw * x;
    m[(0, 0)] / n as f64
}

/// Dense cluster sandwich at coefficients `beta` of the full design.
pub fn dense_sandwich(data: &ModelData, family: &Family, beta: &DVector<f64>, dispersion: f64) -> DMatrix<f64> {
    let design = data.full_design();
    let k = design.ncols();
    let mut labels: Vec<u64> = data.cluster.clone();
    labels.sort_unstable();
    labels.dedup();
    let mut w0 = DMatrix::zeros(k, k);
    let mut w1 = DMatrix::zeros(k, k);
    for label in labels {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| data.cluster[i] == label).collect();
        let m = rows.len();
        let xj = DMatrix::from_fn(m, k, |a, b| design[(rows[a], b)]);
        let eta = &xj * beta;
        let (mu, dmu, var): (Vec<f64>, Vec<f64>, Vec<f64>) = match family.kind {
            FamilyKind::GaussianIdentity => (eta.iter().copied().collect(), vec![1.0; m], vec![dispersion; m]),
            FamilyKind::BinomialLogit => {
                let p: Vec<f64> = eta.iter().map(|e| 1.0 / (1.0 + (-e).exp())).collect();
                let v: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
                (p, v.clone(), v)
            }
            FamilyKind::PoissonLog => {
                let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
                (mu.clone(), mu.clone(), mu)
            }
        };
        let d = diag(&DVector::from_vec(dmu)) * &xj;
        let a_inv = inv(&diag(&DVector::from_vec(var)));
        let r = DVector::from_fn(m, |a, _| data.y[rows[a]] - mu[a]);
        w0 += d.transpose() * &a_inv * &d;
        w1 += d.transpose() * &a_inv * &r * r.transpose() * &a_inv * &d;
    }
    let w0i = inv(&w0);
    &w0i * w1 * &w0i
}

/// Random binary data with `p` tested and `q` nuisance columns (intercept
/// first) in clusters of size `m`.
pub fn random_binomial(seed: u64, n: usize, p: usize, q: usize, m: usize) -> ModelData {
    let mut r = rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| normal(&mut r));
    let z = DMatrix::from_fn(n, q, |_, j| if j == 0 { 1.0 } else { normal(&mut r) });
    let y = DVector::from_fn(n, |i, _| {
        let eta = 0.3 * x[(i, 0)] - 0.2 + if q > 1 { 0.4 * z[(i, 1)] } else { 0.0 };
        if r.random::<f64>() < 1.0 / (1.0 + (-eta).exp()) { 1.0 } else { 0.0 }
    });
    let cluster = (0..n).map(|i| (i / m) as u64).collect();
    ModelData::new(y, x, z, cluster).unwrap()
}

pub fn random_gaussian(seed: u64, n: usize, p: usize, q: usize, m: usize) -> ModelData {
    let mut r = rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| normal(&mut r));
    let z = DMatrix::from_fn(n, q, |_, j| if j == 0 { 1.0 } else { normal(&mut r) });
    let y = DVector::from_fn(n, |i, _| 0.5 * x[(i, 0)] + 1.0 + normal(&mut r));
    let cluster = (0..n).map(|i| (i / m) as u64).collect();
    ModelData::new(y, x, z, cluster).unwrap()
}

pub fn random_signs(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// `sum (x - xbar)(y - ybar) / (sigma sqrt(sum (x - xbar)^2))`.
pub fn classical_score_statistic(x: &[f64], y: &[f64], sigma2: f64) -> f64 {
    let n = x.len() as f64;
    let xb = x.iter().sum::<f64>() / n;
    let yb = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xb) * (b - yb)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xb).powi(2)).sum();
    sxy / (sigma2.sqrt() * sxx.sqrt())
}

/// `(X'X)^{-1} X' diag(e^2) X (X'X)^{-1}`.
pub fn hc0(design: &DMatrix<f64>, resid: &DVector<f64>) -> DMatrix<f64> {
    let bread = inv(&(design.transpose() * design));
    let meat = design.transpose() * diag(&resid.map(|e| e * e)) * design;
    &bread * meat * &bread
}

pub const COUNTRIES: [&str; 8] =
    ["amber", "blue", "coral", "dusk", "ember", "fern", "gold", "haze"];

/// Longitudinal binary outcome with an 8-level subject-level categorical,
/// a numeric time covariate and an age nuisance column. Subjects are the
/// clusters.
pub fn categorical_csv(seed: u64, subjects: usize, visits: usize) -> String {
    let mut r = rng(seed);
    let mut out = String::from("id,y,time,country,age\n");
    for s in 0..subjects {
        let country = COUNTRIES[s % COUNTRIES.len()];
        let age = 20.0 + (r.random::<f64>() * 50.0).round();
        let u = normal(&mut r);
        for t in 0..visits {
            let eta = -0.5 + 0.4 * t as f64 + 0.01 * (age - 45.0) + u;
            let y = u8::from(r.random::<f64>() < 1.0 / (1.0 + (-eta).exp()));
            out.push_str(&format!("S{s:03},{y},{t},{country},{age}\n"));
        }
    }
    out
}
