use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Tabular result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    /// Effective configuration as dotted `key, value` pairs.
    pub config_snapshot: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn new(experiment_id: &str, cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            config_snapshot: cfg.entries(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Rows whose `name` column equals `value`.
    pub fn rows_where(&self, name: &str, value: f64) -> Vec<&[f64]> {
        match self.columns.iter().position(|c| c == name) {
            Some(i) => self
                .rows
                .iter()
                .filter(|r| r[i] == value)
                .map(|r| r.as_slice())
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{}: report has no rows",
                self.experiment_id
            )));
        }
        Ok(())
    }
}

/// One swept parameter with the seeds each point is run under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    /// Checks non-emptiness, finiteness and strict monotonicity of `values`.
    pub fn new(parameter: &str, values: Vec<f64>, seeds: Vec<u64>) -> Result<Self> {
        if values.is_empty() || seeds.is_empty() {
            return Err(Error::InvalidParameter(format!("{parameter}: empty sweep")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{parameter}: non-finite sweep value"
            )));
        }
        let up = values.windows(2).all(|w| w[0] < w[1]);
        let down = values.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::InvalidParameter(format!(
                "{parameter}: sweep values must be strictly monotone"
            )));
        }
        Ok(Self {
            parameter: parameter.to_string(),
            values,
            seeds,
        })
    }
}
