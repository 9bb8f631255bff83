use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    AffineMap, ConditionalGenerator, CopyMode, Covariance, GaussianClassConditional, MemorizingGenerator,
    Nonlinearity, NoiseMixtureGenerator, TruncatedLatentGenerator, UniformBoxGenerator,
};
use crate::dataset::{load_dataset, LabeledDataset};
use crate::error::{Error, Result};

/// JSON description of a generator, tagged by `kind`.
///
/// ```json
/// {"kind": "gaussian", "means": [[0, 0], [3, 0]], "sigma": 1.0}
/// {"kind": "gaussian", "means": [[0], [1]], "covariances": [[[1]], [[2]]], "priors": [0.5, 0.5]}
/// {"kind": "noise_mixture", "base": {...}, "mix_prob": 0.5, "noise_low": [40, 40], "noise_high": [44, 44]}
/// {"kind": "memorizer", "mode": "resample"}
/// {"kind": "truncated_latent", "latent_dim": 2, "nonlinearity": "identity", "truncation": 1.0,
///  "maps": [{"weight": [[1, 0], [0, 1]], "bias": [0, 0]}, ...]}
/// {"kind": "uniform_box", "num_classes": 3, "low": [0, 0], "high": [1, 1]}
/// ```
///
/// A memorizer without `source` memorizes the real training set supplied by
/// the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Gaussian {
        means: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariances: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        priors: Option<Vec<f64>>,
    },
    NoiseMixture {
        base: Box<GeneratorSpec>,
        mix_prob: f64,
        noise_low: Vec<f64>,
        noise_high: Vec<f64>,
    },
    Memorizer {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<PathBuf>,
        #[serde(default)]
        mode: CopyMode,
    },
    TruncatedLatent {
        latent_dim: usize,
        maps: Vec<AffineMapSpec>,
        #[serde(default)]
        nonlinearity: Nonlinearity,
        truncation: f64,
    },
    UniformBox {
        num_classes: usize,
        low: Vec<f64>,
        high: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMapSpec {
    /// Row-major `d x latent_dim`.
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidGenerator(format!("{what} must be a nonempty rectangular matrix")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Gaussian { .. } => "gaussian",
            GeneratorSpec::NoiseMixture { .. } => "noise_mixture",
            GeneratorSpec::Memorizer { .. } => "memorizer",
            GeneratorSpec::TruncatedLatent { .. } => "truncated_latent",
            GeneratorSpec::UniformBox { .. } => "uniform_box",
        }
    }

    /// Instantiates the generator. `real_train` is the default memorizer source.
    pub fn build(&self, real_train: Option<&Arc<LabeledDataset>>) -> Result<Box<dyn ConditionalGenerator>> {
        Ok(match self {
            GeneratorSpec::Gaussian {
                means,
                sigma,
                covariances,
                priors,
            } => {
                let covariance = match (sigma, covariances) {
                    (Some(s), None) => Covariance::Isotropic(*s),
                    (None, Some(covs)) => Covariance::Full(
                        covs.iter()
                            .map(|c| matrix_from_rows(c, "covariance"))
                            .collect::<Result<_>>()?,
                    ),
                    _ => {
                        return Err(Error::InvalidGenerator(
                            "gaussian needs exactly one of `sigma` or `covariances`".into(),
                        ))
                    }
                };
                Box::new(GaussianClassConditional::new(means.clone(), covariance, priors.clone())?)
            }
            GeneratorSpec::NoiseMixture {
                base,
                mix_prob,
                noise_low,
                noise_high,
            } => Box::new(NoiseMixtureGenerator::new(
                base.build(real_train)?,
                *mix_prob,
                noise_low.clone(),
                noise_high.clone(),
            )?),
            GeneratorSpec::Memorizer { source, mode } => {
                let source = match (source, real_train) {
                    (Some(path), _) => Arc::new(load_dataset(path)?),
                    (None, Some(ds)) => Arc::clone(ds),
                    (None, None) => {
                        return Err(Error::InvalidGenerator("memorizer has no source dataset".into()))
                    }
                };
                Box::new(MemorizingGenerator::new(source, *mode)?)
            }
            GeneratorSpec::TruncatedLatent {
                latent_dim,
                maps,
                nonlinearity,
                truncation,
            } => {
                let maps = maps
                    .iter()
                    .map(|m| {
                        Ok(AffineMap {
                            weight: matrix_from_rows(&m.weight, "weight")?,
                            bias: DVector::from_vec(m.bias.clone()),
                        })
                    })
                    .collect::<Result<_>>()?;
                Box::new(TruncatedLatentGenerator::new(*latent_dim, maps, *nonlinearity, *truncation)?)
            }
            GeneratorSpec::UniformBox { num_classes, low, high } => {
                Box::new(UniformBoxGenerator::new(*num_classes, low.clone(), high.clone())?)
            }
        })
    }

    /// Overrides a sweepable parameter (`truncation` or `mix_prob`), looking
    /// through noise-mixture wrappers for `truncation`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match (&mut out, name) {
            (GeneratorSpec::TruncatedLatent { truncation, .. }, "truncation") => *truncation = value,
            (GeneratorSpec::NoiseMixture { mix_prob, .. }, "mix_prob") => *mix_prob = value,
            (GeneratorSpec::NoiseMixture { base, .. }, "truncation") => {
                *base = Box::new(base.with_parameter(name, value)?);
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{} generator has no sweepable parameter `{name}`",
                    self.kind()
                )))
            }
        }
        Ok(out)
    }
}
