use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::glm::{FamilyKind, ModelData};
use crate::rng;
use crate::sim::scenario::{NuisanceMode, Scenario, NUISANCE_CORRELATION};

pub(crate) const DATA_STREAM: u64 = 0;
pub(crate) const FLIP_STREAM: u64 = 1;

/// A replicate together with the latent quantities it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: ModelData,
    /// True means `mu_ij`.
    pub mu: DVector<f64>,
    /// Random intercepts `u_j`.
    pub intercepts: Vec<f64>,
    /// Random slopes `d_j` (zero when disabled).
    pub slopes: Vec<f64>,
}

/// Draws replicate `rep_index` of `scenario`.
///
/// Columns: `x` is the tested covariate; `z` holds an intercept and the
/// nuisance covariate. Cluster labels run from 1 to `num_clusters`, with
/// `n_per_cluster` consecutive rows each.
pub fn simulate_cluster_dataset(scenario: &Scenario, rep_index: usize) -> ModelData {
    simulate_detailed(scenario, rep_index).data
}

pub fn simulate_detailed(scenario: &Scenario, rep_index: usize) -> SimulatedData {
    let seed = rng::derive(scenario.seed, &[rep_index as u64, DATA_STREAM]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scenario.n();
    let m = scenario.n_per_cluster;
    let sd = scenario.random_sd;
    let rho = NUISANCE_CORRELATION;

    let mut y = DVector::zeros(n);
    let mut x = DMatrix::zeros(n, 1);
    let mut z = DMatrix::from_element(n, 2, 1.0);
    let mut cluster = Vec::with_capacity(n);
    let mut means = DVector::zeros(n);
    let mut intercepts = Vec::with_capacity(scenario.num_clusters);
    let mut slopes = Vec::with_capacity(scenario.num_clusters);

    for j in 0..scenario.num_clusters {
        let u: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        let d_draw: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        let slope = if scenario.include_random_slope { d_draw } else { 0.0 };
        let z_cluster: f64 = rng.sample(StandardNormal);
        intercepts.push(u);
        slopes.push(slope);
        for k in 0..m {
            let i = j * m + k;
            let xi: f64 = rng.sample(StandardNormal);
            let zi = match scenario.nuisance_mode {
                NuisanceMode::ClusterLevel => z_cluster,
                NuisanceMode::WithinUncorrelated => rng.sample(StandardNormal),
                NuisanceMode::WithinCorrelated => {
                    let e: f64 = rng.sample(StandardNormal);
                    rho * xi + (1.0 - rho * rho).sqrt() * e
                }
            };
            let eta = xi * scenario.beta + zi * scenario.gamma + u + slope * xi;
            let mu = scenario.family.mean(eta);
            means[i] = mu;
            y[i] = match scenario.family.kind {
                FamilyKind::BinomialLogit => {
                    if rng.random::<f64>() < mu {
                        1.0
                    } else {
                        0.0
                    }
                }
                FamilyKind::PoissonLog => {
                    if mu > 0.0 && mu.is_finite() {
                        Poisson::new(mu).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                }
                FamilyKind::GaussianIdentity => mu + rng.sample::<f64, _>(StandardNormal),
            };
            x[(i, 0)] = xi;
            z[(i, 1)] = zi;
            cluster.push(j as u64 + 1);
        }
    }
    let data = ModelData::new(y, x, z, cluster).expect("simulated shapes are consistent");
    SimulatedData { data, mu: means, intercepts, slopes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flip::BlockStructure;

    #[test]
    fn shape_and_labels() {
        let s = Scenario::desk_scale(10, 5, 0.0);
        let d = simulate_cluster_dataset(&s, 0);
        assert_eq!(d.n(), 50);
        assert_eq!(BlockStructure::from_labels(&d.cluster).num_blocks(), 10);
        assert!(d.y.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(d.z.column(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cluster_level_nuisance_is_constant_within_cluster() {
        let s = Scenario::desk_scale(6, 4, 0.0);
        let d = simulate_cluster_dataset(&s, 3);
        for j in 0..6 {
            let first = d.z[(j * 4, 1)];
            assert!((0..4).all(|k| d.z[(j * 4 + k, 1)] == first));
        }
    }

    #[test]
    fn no_effects_means_half() {
        let mut s = Scenario::desk_scale(4, 3, 0.0);
        s.gamma = 0.0;
        s.random_sd = 0.0;
        let sim = simulate_detailed(&s, 0);
        assert!(sim.mu.iter().all(|&m| m == 0.5));
    }

    #[test]
    fn random_intercept_variance() {
        let s = Scenario::desk_scale(200, 2, 0.0);
        let u = simulate_detailed(&s, 0).intercepts;
        let mean = u.iter().sum::<f64>() / 200.0;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 199.0;
        assert!((20.0..=30.0).contains(&var), "variance {var}");
    }

    #[test]
    fn slopes_vanish_when_disabled() {
        let mut s = Scenario::desk_scale(20, 2, 0.0);
        s.include_random_slope = false;
        assert!(simulate_detailed(&s, 2).slopes.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn null_model_without_effects_is_a_fair_coin() {
        let mut s = Scenario::desk_scale(50, 40, 0.0);
        s.gamma = 0.0;
        s.random_sd = 0.0;
        let d = simulate_cluster_dataset(&s, 1);
        let mean = d.y.mean();
        // 2000 fair coins: sd 0.011
        assert!((mean - 0.5).abs() < 0.06, "mean {mean}");
    }

    #[test]
    fn replicates_are_reproducible_and_distinct() {
        let s = Scenario::desk_scale(10, 5, 0.0);
        assert_eq!(simulate_cluster_dataset(&s, 4), simulate_cluster_dataset(&s, 4));
        assert_ne!(simulate_cluster_dataset(&s, 4).x, simulate_cluster_dataset(&s, 5).x);
    }

    #[test]
    fn correlated_mode_has_target_correlation() {
        let mut s = Scenario::desk_scale(100, 50, 0.0);
        s.nuisance_mode = NuisanceMode::WithinCorrelated;
        let d = simulate_cluster_dataset(&s, 0);
        let x = d.x.column(0);
        let z = d.z.column(1);
        let (mx, mz) = (x.mean(), z.mean());
        let cov: f64 = x.iter().zip(z.iter()).map(|(a, b)| (a - mx) * (b - mz)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vz: f64 = z.iter().map(|b| (b - mz).powi(2)).sum();
        let r = cov / (vx * vz).sqrt();
        assert!((r - 0.5).abs() < 0.05, "correlation {r}");
    }
}
