use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cli::dataset::OutputFormat;
use crate::cli::CliError;
use crate::glm::Family;
use crate::rng;
use crate::sim::{run_scenario, Method, NuisanceMode, Scenario, SimResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Scenario grid read from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "N")]
    num_clusters: OneOrMany<usize>,
    n_per_cluster: OneOrMany<usize>,
    beta: OneOrMany<f64>,
    gamma: OneOrMany<f64>,
    random_sd: OneOrMany<f64>,
    modes: OneOrMany<String>,
    #[serde(default)]
    random_slope: Option<OneOrMany<bool>>,
    methods: OneOrMany<String>,
    reps: usize,
    alpha: f64,
    flips: usize,
    seed: u64,
    #[serde(default)]
    family: Option<String>,
}

/// Expanded simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenarios: Vec<Scenario>,
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("key '{key}': {msg}"))
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let nonempty = |key: &str, len: usize| if len == 0 { Err(config_err(key, "empty list")) } else { Ok(()) };

        let family = match raw.family.as_deref() {
            None => Family::binomial(),
            Some(name) => Family::from_name(name).ok_or_else(|| config_err("family", format!("unknown family '{name}'")))?,
        };
        let modes = raw
            .modes
            .into_vec()
            .into_iter()
            .map(|m| NuisanceMode::parse(&m).ok_or_else(|| config_err("modes", format!("unknown mode '{m}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let methods = raw
            .methods
            .into_vec()
            .into_iter()
            .map(|m| Method::parse(&m).ok_or_else(|| config_err("methods", format!("unknown method '{m}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let ns = raw.num_clusters.into_vec();
        let ms = raw.n_per_cluster.into_vec();
        let betas = raw.beta.into_vec();
        let gammas = raw.gamma.into_vec();
        let sds = raw.random_sd.into_vec();
        let slopes = raw.random_slope.map(OneOrMany::into_vec).unwrap_or_else(|| vec![true]);
        for (key, len) in [
            ("N", ns.len()),
            ("n_per_cluster", ms.len()),
            ("beta", betas.len()),
            ("gamma", gammas.len()),
            ("random_sd", sds.len()),
            ("modes", modes.len()),
            ("random_slope", slopes.len()),
            ("methods", methods.len()),
        ] {
            nonempty(key, len)?;
        }

        let mut scenarios = Vec::new();
        for &num_clusters in &ns {
            for &n_per_cluster in &ms {
                for &beta in &betas {
                    for &gamma in &gammas {
                        for &random_sd in &sds {
                            for &nuisance_mode in &modes {
                                for &include_random_slope in &slopes {
                                    let index = scenarios.len() as u64;
                                    scenarios.push(Scenario {
                                        num_clusters,
                                        n_per_cluster,
                                        beta,
                                        gamma,
                                        random_sd,
                                        include_random_slope,
                                        nuisance_mode,
                                        family,
                                        reps: raw.reps,
                                        alpha: raw.alpha,
                                        num_flips: raw.flips,
                                        methods: methods.clone(),
                                        seed: rng::derive(raw.seed, &[index]),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        for s in &scenarios {
            s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(Self { scenarios })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// One output row per (scenario, method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    #[serde(rename = "N")]
    pub num_clusters: usize,
    pub n_per_cluster: usize,
    pub beta: f64,
    pub gamma: f64,
    pub random_sd: f64,
    pub random_slope: bool,
    pub mode: String,
    pub family: String,
    pub method: String,
    pub reps: usize,
    pub alpha: f64,
    pub flips: usize,
    pub rejections: usize,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub failures: usize,
    pub degenerate_flips: usize,
    pub note: String,
}

pub const SIM_TSV_HEADER: &str = "N\tn_per_cluster\tbeta\tgamma\trandom_sd\trandom_slope\tmode\tfamily\tmethod\treps\talpha\tflips\trejections\tproportion\tci_low\tci_high\tfailures\tdegenerate_flips\tnote";

pub fn rows(result: &SimResult) -> Vec<SimRow> {
    let s = &result.scenario;
    result
        .methods
        .iter()
        .map(|m| SimRow {
            num_clusters: s.num_clusters,
            n_per_cluster: s.n_per_cluster,
            beta: s.beta,
            gamma: s.gamma,
            random_sd: s.random_sd,
            random_slope: s.include_random_slope,
            mode: s.nuisance_mode.as_str().to_string(),
            family: s.family.name().to_string(),
            method: m.method.as_str().to_string(),
            reps: m.reps,
            alpha: s.alpha,
            flips: s.num_flips,
            rejections: m.rejections,
            proportion: m.proportion,
            ci_low: m.ci_low,
            ci_high: m.ci_high,
            failures: m.failures,
            degenerate_flips: m.degenerate_flips,
            note: result.note.clone().unwrap_or_default(),
        })
        .collect()
}

pub fn render_rows(rows: &[SimRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
        OutputFormat::Tsv => {
            let mut out = String::new();
            let _ = writeln!(out, "{SIM_TSV_HEADER}");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.num_clusters,
                    r.n_per_cluster,
                    r.beta,
                    r.gamma,
                    r.random_sd,
                    r.random_slope,
                    r.mode,
                    r.family,
                    r.method,
                    r.reps,
                    r.alpha,
                    r.flips,
                    r.rejections,
                    r.proportion,
                    r.ci_low,
                    r.ci_high,
                    r.failures,
                    r.degenerate_flips,
                    r.note
                );
            }
            out
        }
    }
}

/// Runs every scenario of the config, reporting progress on stderr.
pub fn cmd_simulate(config: &SimConfig) -> Result<Vec<SimRow>, CliError> {
    let total = config.scenarios.len();
    let mut out = Vec::new();
    for (k, scenario) in config.scenarios.iter().enumerate() {
        let result = run_scenario(scenario).map_err(|e| CliError::Config(e.to_string()))?;
        let rates: Vec<String> =
            result.methods.iter().map(|m| format!("{}={:.3}", m.method.as_str(), m.proportion)).collect();
        eprintln!(
            "[{}/{}] N={} n={} beta={} mode={} {}",
            k + 1,
            total,
            scenario.num_clusters,
            scenario.n_per_cluster,
            scenario.beta,
            scenario.nuisance_mode.as_str(),
            rates.join(" ")
        );
        out.extend(rows(&result));
    }
    Ok(out)
}
