use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::embed::EmbedderSpec;
use super::evaluation::{GanTestResult, GapRow, NasPoint};
use crate::classifier::TrainingTrace;

pub type PerClassRow = GapRow;

/// Sample-statistics metrics of the synthetic training set against real
/// training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub embedder: EmbedderSpec,
    pub samples: usize,
    pub is_mean: f64,
    pub is_std: f64,
    pub is_splits: usize,
    pub fid: f64,
    pub kid: f64,
    pub kid_samples: usize,
    pub eigen_clamp_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_fid: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_id: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// reruns of one config.
    pub generated_at_unix: u64,
    pub generator: String,
    pub k: usize,
    pub cas_top1: f64,
    pub cas_topk: f64,
    pub baseline_top1: f64,
    pub baseline_topk: f64,
    pub cas_brier: f64,
    pub baseline_brier: f64,
    pub per_class: Vec<PerClassRow>,
    #[serde(default)]
    pub metrics: Option<SampleMetrics>,
    #[serde(default)]
    pub nas: Vec<NasPoint>,
    #[serde(default)]
    pub gan_test: Option<GanTestResult>,
    pub baseline_training: TrainingTrace,
    pub cas_training: TrainingTrace,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
}
