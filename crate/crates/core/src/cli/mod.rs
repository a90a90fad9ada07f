//! The `flipscore` command line: `test` analyses a CSV, `simulate` runs a
//! scenario grid.
//!
//! Exit codes: 0 success, 1 usage, configuration, input or I/O error,
//! 2 numerical or model error.

mod dataset;
mod report;
mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use dataset::{parse_dataset, AnalysisSpec, Design, OutputFormat, INTERCEPT};
pub use report::{
    analyse, cmd_test, render_json, render_tsv, AnovaRow, Diagnostics, SummaryRow, TestReport, ANOVA_COLUMNS,
    SUMMARY_COLUMNS,
};
pub use simulate::{cmd_simulate, render_rows, rows, SimConfig, SimRow, SIM_TSV_HEADER};

use crate::flip::Alternative;
use crate::glm::Family;

/// JSON schema of the `test` report.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("model error: {0}")]
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flipscore", version, about = "Block sign-flip score tests for clustered GLM data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test coefficients of a GLM fitted to a CSV file.
    Test(TestArgs),
    /// Run a simulation grid from a TOML config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long, default_value = "binomial", value_parser = ["binomial", "poisson", "gaussian"])]
    pub family: String,
    /// Columns tested one coefficient at a time (comma separated).
    #[arg(long = "test", value_delimiter = ',')]
    pub test: Vec<String>,
    /// Multi-column term, `name=col1,col2`. Repeatable.
    #[arg(long = "term")]
    pub term: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub nuisance: Vec<String>,
    /// Cluster id column.
    #[arg(long)]
    pub id: String,
    #[arg(long, default_value_t = 500)]
    pub flips: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "two-sided", value_parser = ["two-sided", "greater", "less"])]
    pub alternative: String,
    #[arg(long, default_value = "json", value_parser = ["json", "tsv"])]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "tsv", value_parser = ["json", "tsv"])]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl TestArgs {
    pub fn to_spec(&self) -> Result<AnalysisSpec, CliError> {
        let family = Family::from_name(&self.family)
            .ok_or_else(|| CliError::Usage(format!("unknown family '{}'", self.family)))?;
        let alternative: Alternative = self.alternative.parse().map_err(CliError::Usage)?;
        let format = OutputFormat::parse(&self.format)
            .ok_or_else(|| CliError::Usage(format!("unknown format '{}'", self.format)))?;
        let terms = self
            .term
            .iter()
            .map(|t| {
                let (name, cols) = t
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--term '{t}' must look like name=col1,col2")))?;
                let cols: Vec<String> =
                    cols.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
                if name.trim().is_empty() || cols.is_empty() {
                    return Err(CliError::Usage(format!("--term '{t}' needs a name and columns")));
                }
                Ok((name.trim().to_string(), cols))
            })
            .collect::<Result<_, _>>()?;
        let clean = |v: &[String]| v.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        Ok(AnalysisSpec {
            input: self.input.clone(),
            response: self.response.clone(),
            family,
            tested: clean(&self.test),
            terms,
            nuisance: clean(&self.nuisance),
            id: self.id.clone(),
            num_flips: self.flips,
            seed: self.seed,
            alternative,
            format,
        })
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test(args) => {
            let spec = args.to_spec()?;
            let report = cmd_test(&spec)?;
            if report.rows_dropped > 0 {
                eprintln!("dropped {} rows with missing values", report.rows_dropped);
            }
            let text = match spec.format {
                OutputFormat::Json => render_json(&report),
                OutputFormat::Tsv => render_tsv(&report),
            };
            write_output(args.out.as_ref(), &text)
        }
        Command::Simulate(args) => {
            let format = OutputFormat::parse(&args.format)
                .ok_or_else(|| CliError::Usage(format!("unknown format '{}'", args.format)))?;
            let config = SimConfig::from_path(&args.config)?;
            let rows = cmd_simulate(&config)?;
            eprintln!("{} scenarios, {} result rows", config.scenarios.len(), rows.len());
            write_output(args.out.as_ref(), &render_rows(&rows, format))
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("flipscore: {e}");
            e.exit_code()
        }
    }
}
