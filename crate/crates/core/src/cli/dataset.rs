use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::cli::CliError;
use crate::flip::Alternative;
use crate::glm::{Family, ModelData};

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Tsv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "tsv" => Some(Self::Tsv),
            _ => None,
        }
    }
}

/// Everything `flipscore test` needs to know about one analysis.
#[derive(Debug, Clone)]
pub struct AnalysisSpec {
    pub input: PathBuf,
    pub response: String,
    pub family: Family,
    /// Raw CSV columns tested one coefficient at a time.
    pub tested: Vec<String>,
    /// Named multi-column terms over raw CSV columns.
    pub terms: Vec<(String, Vec<String>)>,
    pub nuisance: Vec<String>,
    pub id: String,
    pub num_flips: usize,
    pub seed: u64,
    pub alternative: Alternative,
    pub format: OutputFormat,
}

impl AnalysisSpec {
    /// Raw columns entering the tested design: `tested`, then term columns
    /// not already listed.
    pub fn tested_columns(&self) -> Vec<String> {
        let mut out = self.tested.clone();
        for (_, cols) in &self.terms {
            for c in cols {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let tested = self.tested_columns();
        if tested.is_empty() {
            return Err(CliError::Usage("nothing to test: give --test or --term".into()));
        }
        if let Some(c) = tested.iter().find(|c| self.nuisance.contains(c)) {
            return Err(CliError::Usage(format!("column '{c}' is both tested and nuisance")));
        }
        for c in tested.iter().chain(&self.nuisance) {
            if c == &self.response || c == &self.id {
                return Err(CliError::Usage(format!("column '{c}' cannot be a covariate")));
            }
        }
        if self.num_flips < 2 {
            return Err(CliError::Usage("--flips must be at least 2".into()));
        }
        Ok(())
    }
}

/// Design built from a CSV: the model data plus the names behind each
/// column.
#[derive(Debug, Clone)]
pub struct Design {
    pub data: ModelData,
    /// Names of the columns of `data.x`.
    pub x_names: Vec<String>,
    /// Names of the columns of `data.z` (intercept first).
    pub z_names: Vec<String>,
    /// Raw column -> indices into `data.x` of its expansion.
    pub x_groups: Vec<(String, Vec<usize>)>,
    /// Rows skipped because of missing values.
    pub rows_dropped: usize,
}

impl Design {
    pub fn group(&self, raw: &str) -> Option<&[usize]> {
        self.x_groups.iter().find(|(name, _)| name == raw).map(|(_, idx)| idx.as_slice())
    }
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "NA" || t == "NaN" || t == "nan"
}

/// A covariate column expanded into numeric columns.
fn expand(name: &str, values: &[&str]) -> Vec<(String, Vec<f64>)> {
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.trim().parse::<f64>().ok()).collect();
    if let Some(v) = numeric {
        return vec![(name.to_string(), v)];
    }
    let levels: BTreeSet<&str> = values.iter().map(|v| v.trim()).collect();
    // first level alphabetically is the reference
    levels
        .iter()
        .skip(1)
        .map(|level| {
            let col = values.iter().map(|v| if v.trim() == *level { 1.0 } else { 0.0 }).collect();
            (format!("{name} {level}"), col)
        })
        .collect()
}

fn matrix(cols: &[(String, Vec<f64>)], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i])
}

/// Reads the CSV at `path` into a [`Design`] according to `spec`.
pub fn parse_dataset(path: &Path, spec: &AnalysisSpec) -> Result<Design, CliError> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let position = |name: &str| -> Result<usize, CliError> {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::MissingColumn(name.to_string()))
    };

    let tested = spec.tested_columns();
    let response_at = position(&spec.response)?;
    let id_at = position(&spec.id)?;
    let tested_at: Vec<usize> = tested.iter().map(|c| position(c)).collect::<Result<_, _>>()?;
    let nuisance_at: Vec<usize> = spec.nuisance.iter().map(|c| position(c)).collect::<Result<_, _>>()?;
    let used: Vec<usize> = [response_at, id_at].into_iter().chain(tested_at.iter().copied()).chain(nuisance_at.iter().copied()).collect();

    // (data row number, record)
    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    let mut rows_dropped = 0;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse(format!("row {}: {e}", k + 1)))?;
        if used.iter().any(|&c| rec.get(c).is_none_or(is_missing)) {
            rows_dropped += 1;
            continue;
        }
        rows.push((k + 1, rec));
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Parse("no complete rows".into()));
    }

    let mut y = DVector::zeros(n);
    for (i, (row, rec)) in rows.iter().enumerate() {
        let raw = rec[response_at].trim();
        y[i] = raw
            .parse::<f64>()
            .map_err(|_| CliError::Parse(format!("non-numeric response '{raw}' in data row {row}")))?;
    }

    let column = |at: usize| -> Vec<&str> { rows.iter().map(|(_, r)| &r[at]).collect() };

    let mut x_cols = Vec::new();
    let mut x_groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (name, &at) in tested.iter().zip(&tested_at) {
        let expanded = expand(name, &column(at));
        let start = x_cols.len();
        x_groups.push((name.clone(), (start..start + expanded.len()).collect()));
        x_cols.extend(expanded);
    }
    if let Some((name, _)) = x_groups.iter().find(|(_, idx)| idx.is_empty()) {
        return Err(CliError::Model(format!("tested column '{name}' has a single level")));
    }

    let mut z_cols = vec![(INTERCEPT.to_string(), vec![1.0; n])];
    for (name, &at) in spec.nuisance.iter().zip(&nuisance_at) {
        z_cols.extend(expand(name, &column(at)));
    }

    let mut ids: HashMap<&str, u64> = HashMap::new();
    let cluster: Vec<u64> = rows
        .iter()
        .map(|(_, r)| {
            let next = ids.len() as u64;
            *ids.entry(r.get(id_at).unwrap_or("").trim()).or_insert(next)
        })
        .collect();

    let data = ModelData::new(y, matrix(&x_cols, n), matrix(&z_cols, n), cluster)
        .map_err(|e| CliError::Model(e.to_string()))?;
    data.validate(&spec.family).map_err(|e| CliError::Parse(e.to_string()))?;

    Ok(Design {
        data,
        x_names: x_cols.into_iter().map(|(name, _)| name).collect(),
        z_names: z_cols.into_iter().map(|(name, _)| name).collect(),
        x_groups,
        rows_dropped,
    })
}
