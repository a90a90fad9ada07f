use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{gee_independence_fit, gee_wald_test, wald_glm_test};
use crate::error::Result;
use crate::flip::{flip_test, Alternative, BlockStructure, FlipPlan};
use crate::glm::ModelData;
use crate::rng;
use crate::sim::generate::{simulate_cluster_dataset, FLIP_STREAM};
use crate::sim::interval::rejection_interval;
use crate::sim::scenario::{Method, Scenario, LIMITATION_NOTE};

/// Confidence level of the reported rejection-rate intervals.
pub const INTERVAL_LEVEL: f64 = 0.95;

/// Rejection summary of one method over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub rejections: usize,
    pub reps: usize,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicates where the method failed (error or non-convergence) and was
    /// scored as p = 1.
    pub failures: usize,
    /// Flips whose variance degenerated, summed over replicates.
    pub degenerate_flips: usize,
}

impl MethodResult {
    /// Whether the Wilson interval of the rejection rate at `level` covers
    /// `rate`.
    pub fn covers(&self, rate: f64, level: f64) -> bool {
        let (lo, hi) = rejection_interval(self.rejections, self.reps, level);
        lo <= rate && rate <= hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub scenario: Scenario,
    pub methods: Vec<MethodResult>,
    /// Set for scenarios where flipscores is known not to control its level.
    pub note: Option<String>,
}

impl SimResult {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    reject: bool,
    failed: bool,
    degenerate_flips: usize,
}

fn apply(method: Method, scenario: &Scenario, data: &ModelData, rep: usize) -> Outcome {
    let p_or_fail = |r: Result<(f64, bool)>| match r {
        Ok((p, true)) => Outcome { reject: p <= scenario.alpha, ..Default::default() },
        _ => Outcome { failed: true, ..Default::default() },
    };
    match method {
        Method::Flipscores => {
            let seed = rng::derive(scenario.seed, &[rep as u64, FLIP_STREAM]);
            let plan = FlipPlan::new(scenario.num_flips, seed, BlockStructure::from_labels(&data.cluster));
            match flip_test(data, &scenario.family, &plan, Alternative::TwoSided, 0) {
                Ok(r) => Outcome {
                    reject: r.p_value <= scenario.alpha,
                    failed: false,
                    degenerate_flips: r.degenerate_flips,
                },
                Err(_) => Outcome { failed: true, ..Default::default() },
            }
        }
        Method::GlmWald => p_or_fail(wald_glm_test(data, &scenario.family, 0).map(|w| (w.p_value, w.converged))),
        Method::Gee => p_or_fail(
            gee_independence_fit(data, &scenario.family)
                .and_then(|fit| gee_wald_test(&fit, 0))
                .map(|w| (w.p_value, w.converged)),
        ),
    }
}

/// Runs every replicate of `scenario` and aggregates rejection rates.
///
/// Replicates are evaluated in parallel; the result depends only on the
/// scenario (seed included).
pub fn run_scenario(scenario: &Scenario) -> Result<SimResult> {
    scenario.validate()?;
    let outcomes: Vec<Vec<Outcome>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let data = simulate_cluster_dataset(scenario, rep);
            scenario.methods.iter().map(|&m| apply(m, scenario, &data, rep)).collect()
        })
        .collect();

    let methods = scenario
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let rejections = outcomes.iter().filter(|o| o[k].reject).count();
            let failures = outcomes.iter().filter(|o| o[k].failed).count();
            let degenerate_flips = outcomes.iter().map(|o| o[k].degenerate_flips).sum();
            let (ci_low, ci_high) = rejection_interval(rejections, scenario.reps, INTERVAL_LEVEL);
            MethodResult {
                method,
                rejections,
                reps: scenario.reps,
                proportion: rejections as f64 / scenario.reps as f64,
                ci_low,
                ci_high,
                failures,
                degenerate_flips,
            }
        })
        .collect();

    let note = scenario.is_documented_limitation().then(|| LIMITATION_NOTE.to_string());
    Ok(SimResult { scenario: scenario.clone(), methods, note })
}
