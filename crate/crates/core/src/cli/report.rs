use std::fmt::Write as _;

use serde::Serialize;

use crate::cli::dataset::{parse_dataset, AnalysisSpec, Design};
use crate::cli::CliError;
use crate::flip::{flip_test, multi_df_test, BlockStructure, FlipPlan};
use crate::glm::{fit_glm, IrlsConfig};

/// Header of the summary table, in order.
pub const SUMMARY_COLUMNS: [&str; 6] = ["Estimate", "Score", "Std. Error", "z value", "Part. Cor", "Pr(>z)"];
/// Header of the anova table, in order.
pub const ANOVA_COLUMNS: [&str; 3] = ["Df", "Score", "Pr(>Score)"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub name: String,
    #[serde(rename = "Estimate")]
    pub estimate: f64,
    #[serde(rename = "Score")]
    pub score: f64,
    #[serde(rename = "Std. Error")]
    pub std_error: f64,
    #[serde(rename = "z value")]
    pub z_value: f64,
    #[serde(rename = "Part. Cor")]
    pub partial_cor: f64,
    #[serde(rename = "Pr(>z)")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub term: String,
    #[serde(rename = "Df")]
    pub df: usize,
    #[serde(rename = "Score")]
    pub score: f64,
    #[serde(rename = "Pr(>Score)")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub degenerate_flips: usize,
    pub full_model_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub family: String,
    pub alternative: String,
    pub n: usize,
    pub clusters: usize,
    pub num_flips: usize,
    pub seed: u64,
    pub rows_dropped: usize,
    pub summary: Vec<SummaryRow>,
    pub anova: Vec<AnovaRow>,
    pub diagnostics: Diagnostics,
}

fn model_err(e: crate::Error) -> CliError {
    CliError::Model(e.to_string())
}

/// Runs the per-coefficient and per-term flip tests of `spec`.
pub fn cmd_test(spec: &AnalysisSpec) -> Result<TestReport, CliError> {
    let design = parse_dataset(&spec.input, spec)?;
    analyse(spec, &design)
}

pub fn analyse(spec: &AnalysisSpec, design: &Design) -> Result<TestReport, CliError> {
    let data = &design.data;
    let blocks = BlockStructure::from_labels(&data.cluster);
    let plan = FlipPlan::new(spec.num_flips, spec.seed, blocks.clone());

    let full = fit_glm(&data.y, &data.full_design(), &data.offset, &spec.family, &IrlsConfig::default())
        .map_err(model_err)?;

    let mut degenerate_flips = 0;
    let mut summary = Vec::with_capacity(design.x_names.len());
    for (k, name) in design.x_names.iter().enumerate() {
        let r = flip_test(data, &spec.family, &plan, spec.alternative, k).map_err(model_err)?;
        degenerate_flips += r.degenerate_flips;
        summary.push(SummaryRow {
            name: name.clone(),
            estimate: full.coefficients[k],
            score: r.score,
            std_error: r.std_error,
            z_value: r.z_value,
            partial_cor: r.partial_cor,
            p_value: r.p_value,
        });
    }

    let mut terms: Vec<(String, Vec<usize>)> = spec
        .tested
        .iter()
        .map(|raw| (raw.clone(), design.group(raw).unwrap_or_default().to_vec()))
        .collect();
    for (name, cols) in &spec.terms {
        let idx = cols.iter().flat_map(|c| design.group(c).unwrap_or_default().to_vec()).collect();
        terms.push((name.clone(), idx));
    }
    let mut anova = Vec::with_capacity(terms.len());
    for (term, idx) in terms {
        let r = multi_df_test(data, &spec.family, &plan, &idx).map_err(model_err)?;
        anova.push(AnovaRow { term, df: r.df, score: r.statistic, p_value: r.p_value });
    }

    Ok(TestReport {
        family: spec.family.name().to_string(),
        alternative: spec.alternative.to_string(),
        n: data.n(),
        clusters: blocks.num_blocks(),
        num_flips: spec.num_flips,
        seed: spec.seed,
        rows_dropped: design.rows_dropped,
        summary,
        anova,
        diagnostics: Diagnostics { degenerate_flips, full_model_converged: full.converged },
    })
}

pub fn render_json(report: &TestReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Summary table, a blank line, then the anova table.
pub fn render_tsv(report: &TestReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name\t{}", SUMMARY_COLUMNS.join("\t"));
    for r in &report.summary {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.name, r.estimate, r.score, r.std_error, r.z_value, r.partial_cor, r.p_value
        );
    }
    out.push('\n');
    let _ = writeln!(out, "term\t{}", ANOVA_COLUMNS.join("\t"));
    for r in &report.anova {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.term, r.df, r.score, r.p_value);
    }
    out
}
