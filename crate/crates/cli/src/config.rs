//! Experiment configuration files.
//!
//! ```json
//! {
//!   "real_train": "data/train",
//!   "real_test": "data/test",
//!   "generator": {"kind": "gaussian", "means": [[0, 0], [3, 0]], "sigma": 1.0},
//!   "classifier": {"epochs": 30, "architecture": {"type": "multilayer", "hidden": [64], "activation": "relu"}},
//!   "embedder": {"kind": "penultimate"},
//!   "metrics": {"sample_metrics": true, "nas": true, "gan_test": true},
//!   "top_k": 5,
//!   "nas_fractions": [0.25, 0.5, 1.0],
//!   "sweep": {"parameter": "truncation", "values": [0.2, 0.5, 1.0, 2.0]},
//!   "seed": 0,
//!   "out_dir": "out"
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory. `generator`
//! is either an inline spec or a path to a JSON file holding one. When
//! `real_test` is absent the real dataset is split with `test_fraction`.
//! `classifier.seed` is always replaced by a seed derived from `seed`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use genmetric_core::classifier::ClassifierConfig;
use genmetric_core::dataset::{load_dataset, stratified_split, LabeledDataset};
use genmetric_core::metrics::{EmbedderSpec, KidParams, SampleMetricOptions};
use genmetric_core::seed::derive_seed;
use genmetric_core::{seeded_rng, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorRef {
    Path(PathBuf),
    Inline(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricToggles {
    /// IS, FID and KID of the replacement set.
    pub sample_metrics: bool,
    pub nas: bool,
    pub gan_test: bool,
    pub gan_test_size: usize,
    pub is_splits: usize,
    pub kid_max_samples: usize,
    pub kid: KidParams,
    pub per_class_fid: bool,
}

impl Default for MetricToggles {
    fn default() -> Self {
        let defaults = SampleMetricOptions::default();
        Self {
            sample_metrics: true,
            nas: false,
            gan_test: false,
            gan_test_size: 2000,
            is_splits: defaults.is_splits,
            kid_max_samples: defaults.kid_max_samples,
            kid: defaults.kid,
            per_class_fid: defaults.per_class_fid,
        }
    }
}

impl MetricToggles {
    pub fn options(&self) -> SampleMetricOptions {
        SampleMetricOptions {
            is_splits: self.is_splits,
            kid_max_samples: self.kid_max_samples,
            kid: self.kid.clone(),
            per_class_fid: self.per_class_fid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `truncation` or `mix_prob`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub real_train: PathBuf,
    #[serde(default)]
    pub real_test: Option<PathBuf>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub generator: GeneratorRef,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub metrics: MetricToggles,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_nas_fractions")]
    pub nas_fractions: Vec<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_top_k() -> usize {
    5
}

fn default_nas_fractions() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A validated experiment with its datasets loaded and every seed resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub generator: GeneratorSpec,
    pub real_train: Arc<LabeledDataset>,
    pub real_test: Arc<LabeledDataset>,
    pub out_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn load_existing(path: &Path, what: &str) -> Result<LabeledDataset, HarnessError> {
    if !path.exists() {
        return Err(config_error(format!("{what} dataset {} does not exist", path.display())));
    }
    load_dataset(path).map_err(|e| config_error(format!("{what} dataset: {e}")))
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("parsing {}: {e}", path.display())))
}

impl Experiment {
    /// Loads and validates `path`. `seed` and `out_dir` override the file.
    pub fn load(path: &Path, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<Self, HarnessError> {
        let config = read_config(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_config(config, base, seed, out_dir)
    }

    pub fn from_config(
        mut config: ExperimentConfig,
        base: &Path,
        seed: Option<u64>,
        out_dir: Option<PathBuf>,
    ) -> Result<Self, HarnessError> {
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.real_train = resolve(base, &config.real_train);
        config.real_test = config.real_test.as_deref().map(|p| resolve(base, p));
        config.out_dir = match out_dir {
            Some(dir) => dir,
            None => resolve(base, &config.out_dir),
        };

        let generator = match &config.generator {
            GeneratorRef::Inline(spec) => spec.clone(),
            GeneratorRef::Path(p) => {
                let p = resolve(base, p);
                let text = fs::read_to_string(&p)
                    .map_err(|e| config_error(format!("generator spec {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("generator spec {}: {e}", p.display())))?
            }
        };
        let generator = resolve_generator_paths(generator, base);
        config.generator = GeneratorRef::Inline(generator.clone());

        config.classifier.seed = derive_seed(config.seed, "classifier", 0);
        config
            .classifier
            .validate()
            .map_err(|e| config_error(e.to_string()))?;
        if let EmbedderSpec::RandomProjection { seed: s @ None, .. } = &mut config.embedder {
            *s = Some(derive_seed(config.seed, "projection", 0));
        }
        if config.metrics.is_splits == 0 {
            return Err(config_error("metrics.is_splits must be at least 1"));
        }
        if config.metrics.kid_max_samples < 2 {
            return Err(config_error("metrics.kid_max_samples must be at least 2"));
        }
        if config.metrics.gan_test && config.metrics.gan_test_size == 0 {
            return Err(config_error("metrics.gan_test_size must be at least 1"));
        }
        if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
            return Err(config_error(format!("test_fraction must lie in (0, 1), got {}", config.test_fraction)));
        }
        if config.metrics.nas && config.nas_fractions.is_empty() {
            return Err(config_error("nas_fractions must be nonempty when NAS is enabled"));
        }
        if let Some(bad) = config.nas_fractions.iter().find(|f| !(**f > 0.0)) {
            return Err(config_error(format!("NAS fractions must be positive, got {bad}")));
        }
        if let Some(sweep) = &config.sweep {
            if sweep.values.is_empty() {
                return Err(config_error("sweep.values must be nonempty"));
            }
            for &v in &sweep.values {
                generator
                    .with_parameter(&sweep.parameter, v)
                    .map_err(|e| config_error(e.to_string()))?;
            }
        }

        let train_full = load_existing(&config.real_train, "real_train")?;
        let (real_train, real_test) = match &config.real_test {
            Some(p) => (train_full, load_existing(p, "real_test")?),
            None => {
                let mut rng = seeded_rng(derive_seed(config.seed, "split", 0));
                stratified_split(&train_full, config.test_fraction, &mut rng)
                    .map_err(|e| config_error(format!("splitting real data: {e}")))?
            }
        };
        if real_train.dim() != real_test.dim() || real_train.num_classes() != real_test.num_classes() {
            return Err(config_error("real_train and real_test differ in dimension or class count"));
        }
        let k = real_train.num_classes();
        if config.top_k == 0 || config.top_k > k {
            return Err(config_error(format!("top_k must lie in [1, {k}], got {}", config.top_k)));
        }
        let real_train = Arc::new(real_train);
        // surfaces generator errors (bad parameters, mismatched shapes) as config errors
        let built = generator
            .build(Some(&real_train))
            .map_err(|e| config_error(format!("generator: {e}")))?;
        if built.dim() != real_train.dim() || built.num_classes() < k {
            return Err(config_error(format!(
                "generator produces dim {} with {} classes, data has dim {} with {k} classes",
                built.dim(),
                built.num_classes(),
                real_train.dim()
            )));
        }

        let out_dir = config.out_dir.clone();
        Ok(Self {
            config,
            generator,
            real_train,
            real_test: Arc::new(real_test),
            out_dir,
        })
    }

    /// The resolved configuration as recorded in reports. The output
    /// directory is left out so reruns into different directories match.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(&self.config).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        value
    }
}

fn resolve_generator_paths(spec: GeneratorSpec, base: &Path) -> GeneratorSpec {
    match spec {
        GeneratorSpec::Memorizer {
            source: Some(source),
            mode,
        } => GeneratorSpec::Memorizer {
            source: Some(resolve(base, &source)),
            mode,
        },
        GeneratorSpec::NoiseMixture {
            base: inner,
            mix_prob,
            noise_low,
            noise_high,
        } => GeneratorSpec::NoiseMixture {
            base: Box::new(resolve_generator_paths(*inner, base)),
            mix_prob,
            noise_low,
            noise_high,
        },
        other => other,
    }
}
