//! Per-run JSON report.

use std::collections::BTreeMap;

use serde::Serialize;

pub const REPORT_SCHEMA: u32 = 1;

/// Requested tolerances, achieved certificates, sizes and timings for one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ApproxReport {
    pub schema: u32,
    pub task: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges_before: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges_after: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eig_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eig_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_error: Option<f64>,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl ApproxReport {
    pub fn new(task: impl Into<String>, n: usize) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            task: task.into(),
            n,
            ..Self::default()
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}
