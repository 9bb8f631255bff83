//! Scores for generators: accuracy-based (CAS, NAS, GAN-test, per-class gap)
//! and sample-statistics based (Inception-style score, FID, KID), plus the
//! Brier score and Pearson correlation used in the analyses.

mod embed;
mod evaluation;
mod inception;
mod kid;
mod moments;
mod report;
mod scoring;

pub use embed::{Embedder, EmbedderSpec};
pub use evaluation::{
    cas, gan_test, gan_test_with_model, nas, per_class_gap, real_baseline, train_and_evaluate, CasOutcome,
    ClassifierRun, GanTestResult, GapRow, NasPoint, sample_metrics, SampleMetricOptions, PER_CLASS_FID_WARNING,
};
pub use inception::inception_style_score;
pub use kid::{kid, polynomial_kernel, KidParams};
pub use moments::{fid, moment_stats, sqrtm_psd, MomentStats, EIGEN_CLAMP_TOLERANCE, FID_CLAMP_TOLERANCE};
pub use report::{EvaluationReport, PerClassRow, SampleMetrics};
pub use scoring::{brier_score, pearson};
