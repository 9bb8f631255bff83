//! Experiment execution: evaluate, baseline and sweep cycles.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use genmetric_core::classifier::TrainingTrace;
use genmetric_core::metrics::{
    cas, gan_test_with_model, nas, pearson, per_class_gap, real_baseline, sample_metrics, ClassifierRun,
    EvaluationReport, GapRow, SampleMetrics,
};
use genmetric_core::seed::{derive_seed, hash_bytes};
use genmetric_core::Error as CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::HarnessError;

pub const SEED_SPLIT: &str = "split";
pub const SEED_CLASSIFIER: &str = "classifier";
pub const SEED_REPLACEMENT: &str = "replacement";
pub const SEED_NAS: &str = "nas";
pub const SEED_GAN_TEST: &str = "gan_test";
pub const SEED_PROJECTION: &str = "projection";
pub const SEED_SWEEP_POINT: &str = "sweep_point";

/// Identifier derived from the resolved configuration alone.
pub fn run_id(exp: &Experiment) -> String {
    let bytes = serde_json::to_vec(&exp.snapshot()).expect("config serializes");
    format!("{:016x}", hash_bytes(&bytes))
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn seed_table(exp: &Experiment, sweep_points: usize) -> BTreeMap<String, u64> {
    let master = exp.config.seed;
    let mut seeds = BTreeMap::new();
    seeds.insert("master".to_string(), master);
    for purpose in [SEED_CLASSIFIER, SEED_REPLACEMENT, SEED_GAN_TEST] {
        seeds.insert(purpose.to_string(), derive_seed(master, purpose, 0));
    }
    if exp.config.real_test.is_none() {
        seeds.insert(SEED_SPLIT.to_string(), derive_seed(master, SEED_SPLIT, 0));
    }
    if exp.config.metrics.nas {
        let nas_master = derive_seed(master, SEED_NAS, 0);
        seeds.insert(SEED_NAS.to_string(), nas_master);
        for i in 0..exp.config.nas_fractions.len() {
            seeds.insert(format!("{SEED_NAS}/{i}"), derive_seed(nas_master, SEED_NAS, i as u64));
        }
    }
    if let genmetric_core::metrics::EmbedderSpec::RandomProjection { seed: Some(s), .. } = &exp.config.embedder {
        seeds.insert(SEED_PROJECTION.to_string(), *s);
    }
    for i in 0..sweep_points {
        seeds.insert(format!("{SEED_SWEEP_POINT}/{i}"), derive_seed(master, SEED_SWEEP_POINT, i as u64));
    }
    seeds
}

fn baseline_run(exp: &Experiment) -> Result<ClassifierRun, HarnessError> {
    Ok(real_baseline(
        &exp.real_train,
        &exp.real_test,
        &exp.config.classifier,
        exp.config.top_k,
    )?)
}

/// Runs baseline, CAS and the enabled optional metrics.
pub fn evaluate(exp: &Experiment) -> Result<EvaluationReport, HarnessError> {
    let cfg = &exp.config;
    let master = cfg.seed;
    let k = cfg.top_k;
    let gen = exp.generator.build(Some(&exp.real_train))?;
    let baseline = baseline_run(exp)?;
    let outcome = cas(
        gen.as_ref(),
        &exp.real_train,
        &exp.real_test,
        &cfg.classifier,
        k,
        derive_seed(master, SEED_REPLACEMENT, 0),
    )?;
    let per_class = per_class_gap(&outcome.run.top1.per_class, &baseline.top1.per_class)?;
    let metrics = if cfg.metrics.sample_metrics {
        Some(sample_metrics(
            &exp.real_train,
            &outcome.synthetic,
            &baseline.model,
            &cfg.embedder,
            &cfg.metrics.options(),
        )?)
    } else {
        None
    };
    let nas_points = if cfg.metrics.nas {
        nas(
            &exp.real_train,
            gen.as_ref(),
            &cfg.nas_fractions,
            &exp.real_test,
            &cfg.classifier,
            k,
            derive_seed(master, SEED_NAS, 0),
        )?
    } else {
        Vec::new()
    };
    let gan = if cfg.metrics.gan_test {
        Some(gan_test_with_model(
            &baseline.model,
            gen.as_ref(),
            cfg.metrics.gan_test_size,
            k,
            derive_seed(master, SEED_GAN_TEST, 0),
        )?)
    } else {
        None
    };
    Ok(EvaluationReport {
        run_id: run_id(exp),
        generated_at_unix: now_unix(),
        generator: exp.generator.kind().to_string(),
        k,
        cas_top1: outcome.run.top1.accuracy,
        cas_topk: outcome.run.topk.accuracy,
        baseline_top1: baseline.top1.accuracy,
        baseline_topk: baseline.topk.accuracy,
        cas_brier: outcome.run.brier,
        baseline_brier: baseline.brier,
        per_class,
        metrics,
        nas: nas_points,
        gan_test: gan,
        baseline_training: baseline.trace,
        cas_training: outcome.run.trace,
        config: exp.snapshot(),
        seeds: seed_table(exp, 0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub run_id: String,
    pub generated_at_unix: u64,
    pub k: usize,
    pub top1: f64,
    pub topk: f64,
    pub brier: f64,
    pub per_class: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
    pub training: TrainingTrace,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
}

/// Trains and scores the classifier on real data only.
pub fn baseline(exp: &Experiment) -> Result<BaselineReport, HarnessError> {
    let run = baseline_run(exp)?;
    Ok(BaselineReport {
        run_id: run_id(exp),
        generated_at_unix: now_unix(),
        k: exp.config.top_k,
        top1: run.top1.accuracy,
        topk: run.topk.accuracy,
        brier: run.brier,
        per_class: run.top1.per_class,
        class_counts: run.top1.class_counts,
        training: run.trace,
        config: exp.snapshot(),
        seeds: seed_table(exp, 0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub cas_top1: f64,
    pub cas_topk: f64,
    pub is_mean: f64,
    pub is_std: f64,
    pub fid: f64,
    pub kid: f64,
    /// Trace of the replacement set's sample covariance in input space.
    pub covariance_trace: f64,
    pub per_class: Vec<GapRow>,
}

/// Pearson coefficient, or the reason it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

impl Correlation {
    fn between(xs: &[f64], ys: &[f64]) -> Self {
        if xs.len() < 2 {
            return Self {
                value: None,
                undefined: Some("fewer than two grid points".into()),
            };
        }
        match pearson(xs, ys) {
            Ok(v) => Self {
                value: Some(v),
                undefined: None,
            },
            Err(CoreError::ZeroVariance) => Self {
                value: None,
                undefined: Some("zero variance".into()),
            },
            Err(e) => Self {
                value: None,
                undefined: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub run_id: String,
    pub generated_at_unix: u64,
    pub generator: String,
    pub parameter: String,
    pub k: usize,
    pub baseline_top1: f64,
    pub baseline_topk: f64,
    pub rows: Vec<SweepRow>,
    pub cas_top1_vs_fid: Correlation,
    pub cas_top1_vs_is_mean: Correlation,
    pub cas_top1_vs_kid: Correlation,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
}

fn covariance_trace(ds: &genmetric_core::LabeledDataset) -> f64 {
    let (n, d) = (ds.len(), ds.dim());
    if n < 2 {
        return 0.0;
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(ds.row(i)) {
            *m += f64::from(v) / n as f64;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for (m, &v) in mean.iter().zip(ds.row(i)) {
            total += (f64::from(v) - m).powi(2);
        }
    }
    total / (n - 1) as f64
}

/// One evaluate cycle per grid value; points run concurrently and rows keep
/// grid order.
pub fn sweep(exp: &Experiment) -> Result<SweepReport, HarnessError> {
    let cfg = &exp.config;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Config("config has no `sweep` section".into()))?;
    let baseline = baseline_run(exp)?;
    let opts = cfg.metrics.options();
    let rows = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let point = exp.generator.with_parameter(&spec.parameter, value)?;
            let gen = point.build(Some(&exp.real_train))?;
            let outcome = cas(
                gen.as_ref(),
                &exp.real_train,
                &exp.real_test,
                &cfg.classifier,
                cfg.top_k,
                derive_seed(cfg.seed, SEED_SWEEP_POINT, i as u64),
            )?;
            let SampleMetrics {
                is_mean, is_std, fid, kid, ..
            } = sample_metrics(&exp.real_train, &outcome.synthetic, &baseline.model, &cfg.embedder, &opts)?;
            Ok(SweepRow {
                grid_value: value,
                cas_top1: outcome.run.top1.accuracy,
                cas_topk: outcome.run.topk.accuracy,
                is_mean,
                is_std,
                fid,
                kid,
                covariance_trace: covariance_trace(&outcome.synthetic),
                per_class: per_class_gap(&outcome.run.top1.per_class, &baseline.top1.per_class)?,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let column = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let cas_top1 = column(|r| r.cas_top1);
    Ok(SweepReport {
        run_id: run_id(exp),
        generated_at_unix: now_unix(),
        generator: exp.generator.kind().to_string(),
        parameter: spec.parameter.clone(),
        k: cfg.top_k,
        baseline_top1: baseline.top1.accuracy,
        baseline_topk: baseline.topk.accuracy,
        cas_top1_vs_fid: Correlation::between(&cas_top1, &column(|r| r.fid)),
        cas_top1_vs_is_mean: Correlation::between(&cas_top1, &column(|r| r.is_mean)),
        cas_top1_vs_kid: Correlation::between(&cas_top1, &column(|r| r.kid)),
        rows,
        config: exp.snapshot(),
        seeds: seed_table(exp, spec.values.len()),
    })
}
