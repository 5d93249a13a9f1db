//! Report structures: deterministic, serializable, self-contained.

use serde::{Deserialize, Serialize};

use super::ExperimentSpec;

/// One reported statistic. Every value ships with its standard error; pass
/// verdicts, where present, are derivable from the stored numbers and the
/// spec's tolerances alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Stat {
    pub fn new(name: impl Into<String>, value: f64, std_error: f64) -> Self {
        Self {
            name: name.into(),
            value,
            std_error,
            ci_lo: None,
            ci_hi: None,
            pass: None,
        }
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_lo = Some(lo);
        self.ci_hi = Some(hi);
        self
    }
}

/// One grid cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub stats: Vec<Stat>,
    pub pass: bool,
}

impl Cell {
    pub fn new(id: impl Into<String>, stats: Vec<Stat>) -> Self {
        let pass = stats.iter().all(|s| s.pass.unwrap_or(true));
        Self {
            id: id.into(),
            stats,
            pass,
        }
    }

    pub fn stat(&self, name: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.name == name)
    }
}

/// A full experiment report: a pure function of (spec, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub spec: ExperimentSpec,
    pub cells: Vec<Cell>,
    pub pass: bool,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl Report {
    pub fn new(spec: &ExperimentSpec, cells: Vec<Cell>) -> Self {
        let pass = cells.iter().all(|c| c.pass);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: spec.experiment.name().to_string(),
            seed: spec.seed,
            spec: spec.clone(),
            cells,
            pass,
        }
    }

    pub fn cell(&self, id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == id)
    }
}
