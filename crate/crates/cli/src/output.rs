//! Report files. Every output is rendered in memory first so a failed run
//! leaves no partial files behind.
//!
//! CSV schemas (floats with six decimals, missing values empty):
//! - `summary.csv`: `metric,value`, rows in [`SUMMARY_METRICS`] order.
//! - `per_class.csv`: `class,model_acc,real_acc,gap,flag_zero`, ranked by gap.
//! - `sweep.csv`: `grid_value,cas_top1,cas_topk,is_mean,is_std,fid,kid`, in grid order.

use std::fs;
use std::path::{Path, PathBuf};

use genmetric_core::metrics::{EvaluationReport, GapRow};
use serde::Serialize;

use crate::error::HarnessError;
use crate::run::{BaselineReport, SweepReport};

pub const REPORT_FILE: &str = "report.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const SWEEP_JSON_FILE: &str = "sweep.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PER_CLASS_FILE: &str = "per_class.csv";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";

pub const SUMMARY_METRICS: [&str; 15] = [
    "run_id",
    "generator",
    "k",
    "cas_top1",
    "cas_topk",
    "baseline_top1",
    "baseline_topk",
    "cas_brier",
    "baseline_brier",
    "is_mean",
    "is_std",
    "fid",
    "kid",
    "gan_test_top1",
    "gan_test_topk",
];

pub const PER_CLASS_HEADER: [&str; 5] = ["class", "model_acc", "real_acc", "gap", "flag_zero"];
pub const SWEEP_HEADER: [&str; 7] = ["grid_value", "cas_top1", "cas_topk", "is_mean", "is_std", "fid", "kid"];

pub fn fmt_float(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Runtime(format!("flushing CSV: {e}")))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Default)]
struct Summary {
    values: Vec<(&'static str, String)>,
}

impl Summary {
    fn set(&mut self, metric: &'static str, value: String) {
        debug_assert!(SUMMARY_METRICS.contains(&metric));
        self.values.push((metric, value));
    }

    fn render(&self) -> Result<Vec<u8>, HarnessError> {
        let rows: Vec<Vec<String>> = SUMMARY_METRICS
            .iter()
            .map(|m| {
                let value = self
                    .values
                    .iter()
                    .find(|(k, _)| k == m)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default();
                vec![m.to_string(), value]
            })
            .collect();
        csv_bytes(&["metric", "value"], &rows)
    }
}

pub fn summary_csv(report: &EvaluationReport) -> Result<Vec<u8>, HarnessError> {
    let mut s = Summary::default();
    s.set("run_id", report.run_id.clone());
    s.set("generator", report.generator.clone());
    s.set("k", report.k.to_string());
    s.set("cas_top1", fmt_float(report.cas_top1));
    s.set("cas_topk", fmt_float(report.cas_topk));
    s.set("baseline_top1", fmt_float(report.baseline_top1));
    s.set("baseline_topk", fmt_float(report.baseline_topk));
    s.set("cas_brier", fmt_float(report.cas_brier));
    s.set("baseline_brier", fmt_float(report.baseline_brier));
    if let Some(m) = &report.metrics {
        s.set("is_mean", fmt_float(m.is_mean));
        s.set("is_std", fmt_float(m.is_std));
        s.set("fid", fmt_float(m.fid));
        s.set("kid", fmt_float(m.kid));
    }
    if let Some(g) = &report.gan_test {
        s.set("gan_test_top1", fmt_float(g.top1));
        s.set("gan_test_topk", fmt_float(g.topk));
    }
    s.render()
}

pub fn baseline_summary_csv(report: &BaselineReport) -> Result<Vec<u8>, HarnessError> {
    let mut s = Summary::default();
    s.set("run_id", report.run_id.clone());
    s.set("k", report.k.to_string());
    s.set("baseline_top1", fmt_float(report.top1));
    s.set("baseline_topk", fmt_float(report.topk));
    s.set("baseline_brier", fmt_float(report.brier));
    s.render()
}

pub fn per_class_csv(rows: &[GapRow]) -> Result<Vec<u8>, HarnessError> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.class.to_string(),
                fmt_opt(r.model_acc),
                fmt_opt(r.real_acc),
                fmt_opt(r.gap),
                u8::from(r.flag_zero).to_string(),
            ]
        })
        .collect();
    csv_bytes(&PER_CLASS_HEADER, &rows)
}

pub fn sweep_csv(report: &SweepReport) -> Result<Vec<u8>, HarnessError> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.grid_value.to_string(),
                fmt_float(r.cas_top1),
                fmt_float(r.cas_topk),
                fmt_float(r.is_mean),
                fmt_float(r.is_std),
                fmt_float(r.fid),
                fmt_float(r.kid),
            ]
        })
        .collect();
    csv_bytes(&SWEEP_HEADER, &rows)
}

/// Rendered files of one command, written together.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Runtime(format!("creating {}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                fs::write(&path, bytes)
                    .map_err(|e| HarnessError::Runtime(format!("writing {}: {e}", path.display())))?;
                Ok(path)
            })
            .collect()
    }
}

pub fn evaluation_outputs(report: &EvaluationReport) -> Result<OutputSet, HarnessError> {
    let mut out = OutputSet::default();
    out.add(REPORT_FILE, json_bytes(report)?);
    out.add(SUMMARY_FILE, summary_csv(report)?);
    out.add(PER_CLASS_FILE, per_class_csv(&report.per_class)?);
    Ok(out)
}

pub fn baseline_outputs(report: &BaselineReport) -> Result<OutputSet, HarnessError> {
    let mut out = OutputSet::default();
    out.add(BASELINE_FILE, json_bytes(report)?);
    out.add(SUMMARY_FILE, baseline_summary_csv(report)?);
    Ok(out)
}

pub fn sweep_outputs(report: &SweepReport) -> Result<OutputSet, HarnessError> {
    let mut out = OutputSet::default();
    out.add(SWEEP_JSON_FILE, json_bytes(report)?);
    out.add(SWEEP_CSV_FILE, sweep_csv(report)?);
    out.add(crate::plot::SWEEP_SVG, crate::plot::sweep_svg(&crate::plot::SweepSeries::from_report(report)));
    Ok(out)
}
