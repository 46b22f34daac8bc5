//! Experiment reports and their on-disk TOML form.
//!
//! Top-level keys are fixed: `setting`, `method`, `metric`, `aggregation`,
//! `config_hash`, `seed`, `domain_weighting`, `aggregate`, then the `rows`
//! table array, `curves`, `baselines` run on the same splits, and the
//! `config` snapshot the run was made from.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean of the row metrics.
    MeanOverRows,
    /// RMSE over every test record, i.e. `sqrt(Σ n·rmse² / Σ n)` over rows.
    PooledRmse,
}

impl Aggregation {
    pub fn aggregate(self, rows: &[ReportRow]) -> f64 {
        if rows.is_empty() {
            return f64::NAN;
        }
        match self {
            Aggregation::MeanOverRows => rows.iter().map(|r| r.metric).sum::<f64>() / rows.len() as f64,
            Aggregation::PooledRmse => {
                let n: usize = rows.iter().map(|r| r.n_test).sum();
                let sse: f64 = rows.iter().map(|r| r.metric * r.metric * r.n_test as f64).sum();
                (sse / n as f64).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub domain: String,
    pub metric: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub epochs: Vec<usize>,
    pub objective: Vec<f64>,
}

impl Curve {
    pub fn new(label: impl Into<String>, points: &[(usize, f64)]) -> Self {
        Self {
            label: label.into(),
            epochs: points.iter().map(|p| p.0).collect(),
            objective: points.iter().map(|p| p.1).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub aggregate: f64,
    pub rows: Vec<ReportRow>,
}

impl MethodResult {
    pub fn new(method: impl Into<String>, aggregation: Aggregation, rows: Vec<ReportRow>) -> Self {
        Self {
            method: method.into(),
            aggregate: aggregation.aggregate(&rows),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub setting: String,
    pub method: String,
    pub metric: String,
    pub aggregation: Aggregation,
    pub config_hash: String,
    pub seed: u64,
    pub domain_weighting: String,
    pub aggregate: f64,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub baselines: Vec<MethodResult>,
    #[serde(default)]
    pub config: String,
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

impl ExperimentReport {
    pub fn baseline(&self, method: &str) -> Option<&MethodResult> {
        self.baselines.iter().find(|b| b.method == method)
    }

    /// Recomputes the aggregate from the rows.
    pub fn check_aggregate(&self) -> bool {
        let want = self.aggregation.aggregate(&self.rows);
        (want - self.aggregate).abs() <= 1e-12 * want.abs().max(1.0)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise report: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse report: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
