use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Feature space in which FID/KID are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderSpec {
    Identity,
    /// Seeded Gaussian projection to `dim` coordinates, entries `N(0, 1) / sqrt(D)`.
    RandomProjection {
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Last hidden layer of the classifier trained on real data.
    Penultimate,
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Penultimate
    }
}

#[derive(Debug, Clone)]
pub enum Embedder {
    Identity,
    Projection(DMatrix<f64>),
    Penultimate(ClassifierModel),
}

impl Embedder {
    /// `model` is required for [`EmbedderSpec::Penultimate`].
    pub fn from_spec(spec: &EmbedderSpec, input_dim: usize, model: Option<&ClassifierModel>) -> Result<Self> {
        match spec {
            EmbedderSpec::Identity => Ok(Embedder::Identity),
            EmbedderSpec::RandomProjection { dim, seed } => {
                let seed = seed.ok_or_else(|| Error::InvalidArgument("random projection needs a seed".into()))?;
                if *dim == 0 || *dim > input_dim {
                    return Err(Error::InvalidArgument(format!(
                        "projection dimension must lie in [1, {input_dim}], got {dim}"
                    )));
                }
                let mut rng = seeded_rng(seed);
                let norm = (input_dim as f64).sqrt();
                Ok(Embedder::Projection(DMatrix::from_fn(*dim, input_dim, |_, _| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal) / norm
                })))
            }
            EmbedderSpec::Penultimate => {
                let model = model.ok_or_else(|| {
                    Error::InvalidArgument("penultimate embedding needs a trained classifier".into())
                })?;
                if model.dim() != input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: input_dim,
                        actual: model.dim(),
                    });
                }
                Ok(Embedder::Penultimate(model.clone()))
            }
        }
    }

    /// Embeds the rows of an `n x D` matrix.
    pub fn embed_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Embedder::Identity => Ok(x.clone()),
            Embedder::Projection(p) => {
                if x.ncols() != p.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: p.ncols(),
                        actual: x.ncols(),
                    });
                }
                Ok(x * p.transpose())
            }
            Embedder::Penultimate(model) => {
                let width = model.penultimate_dim();
                let mut out = DMatrix::zeros(x.nrows(), width);
                for (i, row) in x.row_iter().enumerate() {
                    let row: Vec<f64> = row.iter().copied().collect();
                    let h = model.hidden_features(&row)?;
                    out.row_mut(i).copy_from_slice(&h);
                }
                Ok(out)
            }
        }
    }

    pub fn embed(&self, ds: &LabeledDataset) -> Result<DMatrix<f64>> {
        self.embed_matrix(&ds.to_matrix())
    }
}
