use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-sided" | "two.sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            other => Err(format!("unknown alternative '{other}'")),
        }
    }
}

/// Number of flipped statistics at least as extreme as `observed`.
///
/// Ties count against the observed statistic.
pub fn exceedances(observed: f64, flipped: &[f64], alternative: Alternative) -> usize {
    match alternative {
        Alternative::Greater => flipped.iter().filter(|&&s| s >= observed).count(),
        Alternative::Less => flipped.iter().filter(|&&s| s <= observed).count(),
        Alternative::TwoSided => {
            let a = observed.abs();
            flipped.iter().filter(|&&s| s.abs() >= a).count()
        }
    }
}

/// Monte Carlo p-value `#{w : flipped_w at least as extreme} / W`.
///
/// `flipped[0]` must be the observed statistic, so the result is in
/// `{1/W, ..., 1}`.
pub fn compute_pvalue(observed: f64, flipped: &[f64], alternative: Alternative) -> f64 {
    assert!(flipped.len() >= 2, "need at least two flips");
    debug_assert!(flipped[0] == observed || (flipped[0].is_nan() && observed.is_nan()));
    exceedances(observed, flipped, alternative) as f64 / flipped.len() as f64
}
