use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::{Embedder, EmbedderSpec};
use super::inception::inception_style_score;
use super::kid::{kid, KidParams};
use super::moments::{fid, moment_stats, EIGEN_CLAMP_TOLERANCE};
use super::report::SampleMetrics;
use super::scoring::brier_score;
use crate::classifier::{train, ClassifierConfig, ClassifierModel, TopkEvaluation, TrainingTrace};
use crate::dataset::{build_augmented_set, build_replacement_set, LabeledDataset};
use crate::error::{Error, Result};
use crate::generators::ConditionalGenerator;
use crate::seed::derive_seed;
use crate::seeded_rng;

/// A trained classifier and its scores on the real test set.
#[derive(Debug, Clone)]
pub struct ClassifierRun {
    pub model: ClassifierModel,
    pub trace: TrainingTrace,
    pub top1: TopkEvaluation,
    pub topk: TopkEvaluation,
    pub brier: f64,
}

fn check_pair(train: &LabeledDataset, test: &LabeledDataset) -> Result<()> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: test.dim(),
        });
    }
    if train.num_classes() != test.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "train has {} classes, test {}",
            train.num_classes(),
            test.num_classes()
        )));
    }
    Ok(())
}

pub fn train_and_evaluate(
    train_set: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &ClassifierConfig,
    k: usize,
) -> Result<ClassifierRun> {
    check_pair(train_set, test)?;
    let (model, trace) = train(train_set, cfg)?;
    let top1 = model.evaluate_topk(test, 1)?;
    let topk = model.evaluate_topk(test, k)?;
    let probs = model.predict_proba_all(test)?;
    let labels: Vec<usize> = (0..test.len()).map(|i| test.label(i)).collect();
    let brier = brier_score(&probs, &labels)?;
    Ok(ClassifierRun {
        model,
        trace,
        top1,
        topk,
        brier,
    })
}

/// Classifier trained directly on real data: the reference every generator
/// is compared against.
pub fn real_baseline(
    real_train: &LabeledDataset,
    real_test: &LabeledDataset,
    cfg: &ClassifierConfig,
    k: usize,
) -> Result<ClassifierRun> {
    train_and_evaluate(real_train, real_test, cfg, k)
}

#[derive(Debug, Clone)]
pub struct CasOutcome {
    pub run: ClassifierRun,
    /// The replacement training set the classifier saw.
    pub synthetic: LabeledDataset,
}

/// Classification Accuracy Score: replace every real training example by a
/// generator sample of the same class, train on that, test on real data.
pub fn cas(
    gen: &dyn ConditionalGenerator,
    real_train: &LabeledDataset,
    real_test: &LabeledDataset,
    cfg: &ClassifierConfig,
    k: usize,
    sample_seed: u64,
) -> Result<CasOutcome> {
    check_pair(real_train, real_test)?;
    let synthetic = build_replacement_set(gen, real_train, &mut seeded_rng(sample_seed))?;
    let run = train_and_evaluate(&synthetic, real_test, cfg, k)?;
    Ok(CasOutcome { run, synthetic })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NasPoint {
    pub fraction: f64,
    pub train_size: usize,
    pub top1: f64,
    pub topk: f64,
    pub seed: u64,
}

/// Naive Augmentation Score: one train/evaluate cycle per augmentation
/// fraction. Fraction `i` samples with `derive_seed(sample_seed, "nas", i)`.
#[allow(clippy::too_many_arguments)]
pub fn nas(
    real_train: &LabeledDataset,
    gen: &dyn ConditionalGenerator,
    fractions: &[f64],
    real_test: &LabeledDataset,
    cfg: &ClassifierConfig,
    k: usize,
    sample_seed: u64,
) -> Result<Vec<NasPoint>> {
    check_pair(real_train, real_test)?;
    if let Some(bad) = fractions.iter().find(|f| !(**f > 0.0)) {
        return Err(Error::InvalidArgument(format!("NAS fraction must be positive, got {bad}")));
    }
    fractions
        .par_iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let seed = derive_seed(sample_seed, "nas", i as u64);
            let augmented = build_augmented_set(real_train, gen, fraction, &mut seeded_rng(seed))?;
            let run = train_and_evaluate(&augmented, real_test, cfg, k)?;
            Ok(NasPoint {
                fraction,
                train_size: augmented.len(),
                top1: run.top1.accuracy,
                topk: run.topk.accuracy,
                seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanTestResult {
    pub size: usize,
    pub top1: f64,
    pub topk: f64,
    pub per_class: Vec<Option<f64>>,
}

/// Scores a real-data classifier on `size` fresh generator samples, labels
/// assigned round-robin over classes.
pub fn gan_test_with_model(
    model: &ClassifierModel,
    gen: &dyn ConditionalGenerator,
    size: usize,
    k: usize,
    sample_seed: u64,
) -> Result<GanTestResult> {
    let num_classes = model.num_classes();
    if size < 1 {
        return Err(Error::InvalidArgument("GAN-test needs at least one sample".into()));
    }
    if gen.num_classes() < num_classes || gen.dim() != model.dim() {
        return Err(Error::InvalidGenerator(format!(
            "generator ({} classes, dim {}) does not match classifier ({num_classes} classes, dim {})",
            gen.num_classes(),
            gen.dim(),
            model.dim()
        )));
    }
    let mut rng = seeded_rng(sample_seed);
    let labels: Vec<u32> = (0..size).map(|i| (i % num_classes) as u32).collect();
    let rows = labels
        .iter()
        .map(|&c| gen.sample(c as usize, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let synthetic = LabeledDataset::from_rows("gan-test", &rows, labels, num_classes)?;
    let top1 = model.evaluate_topk(&synthetic, 1)?;
    let topk = model.evaluate_topk(&synthetic, k)?;
    Ok(GanTestResult {
        size,
        top1: top1.accuracy,
        topk: topk.accuracy,
        per_class: top1.per_class,
    })
}

pub fn gan_test(
    real_train: &LabeledDataset,
    gen: &dyn ConditionalGenerator,
    size: usize,
    cfg: &ClassifierConfig,
    k: usize,
    sample_seed: u64,
) -> Result<GanTestResult> {
    let (model, _) = train(real_train, cfg)?;
    gan_test_with_model(&model, gen, size, k, sample_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub class: usize,
    pub model_acc: Option<f64>,
    pub real_acc: Option<f64>,
    /// `model_acc - real_acc`.
    pub gap: Option<f64>,
    /// The generator-trained classifier never gets this class right.
    pub flag_zero: bool,
}

/// Per-class comparison sorted by ascending gap (worst class first); ties
/// keep class order, classes without a gap go last.
pub fn per_class_gap(model_per_class: &[Option<f64>], real_per_class: &[Option<f64>]) -> Result<Vec<GapRow>> {
    if model_per_class.len() != real_per_class.len() {
        return Err(Error::DimensionMismatch {
            expected: real_per_class.len(),
            actual: model_per_class.len(),
        });
    }
    let mut rows: Vec<GapRow> = model_per_class
        .iter()
        .zip(real_per_class)
        .enumerate()
        .map(|(class, (&m, &r))| GapRow {
            class,
            model_acc: m,
            real_acc: r,
            gap: m.zip(r).map(|(m, r)| m - r),
            flag_zero: m == Some(0.0),
        })
        .collect();
    rows.sort_by(|a, b| match (a.gap, b.gap) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleMetricOptions {
    pub is_splits: usize,
    /// KID uses at most this many leading rows of each set.
    pub kid_max_samples: usize,
    pub kid: KidParams,
    /// Opt-in; per-class sample counts make these estimates strongly biased.
    pub per_class_fid: bool,
}

impl Default for SampleMetricOptions {
    fn default() -> Self {
        Self {
            is_splits: 10,
            kid_max_samples: 2000,
            kid: KidParams::default(),
            per_class_fid: false,
        }
    }
}

pub const PER_CLASS_FID_WARNING: &str =
    "per-class FID uses per-class sample counts; FID is strongly biased at small n, compare with care";

/// IS of `synthetic` under `classifier`, and FID/KID between `real` and
/// `synthetic` in the embedding space described by `embedder`.
pub fn sample_metrics(
    real: &LabeledDataset,
    synthetic: &LabeledDataset,
    classifier: &ClassifierModel,
    embedder: &EmbedderSpec,
    opts: &SampleMetricOptions,
) -> Result<SampleMetrics> {
    check_pair(real, synthetic)?;
    let probs = classifier.predict_proba_all(synthetic)?;
    let (is_mean, is_std) = inception_style_score(&probs, opts.is_splits)?;

    let embed = Embedder::from_spec(embedder, real.dim(), Some(classifier))?;
    let real_features = embed.embed(real)?;
    let synthetic_features = embed.embed(synthetic)?;
    let fid_value = fid(&moment_stats(&real_features)?, &moment_stats(&synthetic_features)?)?;

    let m = real_features.nrows().min(opts.kid_max_samples);
    let n = synthetic_features.nrows().min(opts.kid_max_samples);
    let kid_value = kid(
        &real_features.rows(0, m).into_owned(),
        &synthetic_features.rows(0, n).into_owned(),
        &opts.kid,
    )?;

    let mut warnings = Vec::new();
    let per_class_fid = if opts.per_class_fid {
        warnings.push(PER_CLASS_FID_WARNING.to_string());
        let (real_idx, syn_idx) = (real.class_indices(), synthetic.class_indices());
        let values = real_idx
            .iter()
            .zip(&syn_idx)
            .map(|(ri, si)| {
                if ri.len() < 2 || si.len() < 2 {
                    return Ok(None);
                }
                let a = moment_stats(&real_features.select_rows(ri))?;
                let b = moment_stats(&synthetic_features.select_rows(si))?;
                fid(&a, &b).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(values)
    } else {
        None
    };

    Ok(SampleMetrics {
        embedder: embedder.clone(),
        samples: synthetic.len(),
        is_mean,
        is_std,
        is_splits: opts.is_splits,
        fid: fid_value,
        kid: kid_value,
        kid_samples: m.min(n),
        eigen_clamp_tolerance: EIGEN_CLAMP_TOLERANCE,
        per_class_fid,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_have_no_gap() {
        let v = vec![Some(0.5), Some(0.9), Some(0.7)];
        let rows = per_class_gap(&v, &v).unwrap();
        assert!(rows.iter().all(|r| r.gap == Some(0.0) && !r.flag_zero));
        assert_eq!(rows.iter().map(|r| r.class).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn dropped_class_first_and_flagged() {
        let model = [Some(0.0), Some(1.0), Some(1.0)];
        let real = [Some(0.9); 3];
        let rows = per_class_gap(&model, &real).unwrap();
        assert_eq!(rows[0].class, 0);
        assert!(rows[0].flag_zero);
        assert!((rows[0].gap.unwrap() + 0.9).abs() < 1e-15);
        assert!(!rows[1].flag_zero && !rows[2].flag_zero);
    }

    #[test]
    fn absent_classes_sort_last() {
        let rows = per_class_gap(&[None, Some(0.2)], &[Some(0.5), Some(0.4)]).unwrap();
        assert_eq!(rows[0].class, 1);
        assert_eq!(rows[1].gap, None);
        assert!(per_class_gap(&[None], &[None, None]).is_err());
    }
}
