//! Class-conditional generators with known ground truth.
//!
//! Every generator samples `x ~ p(x | y)` from an explicitly passed random
//! source. Generators with a closed-form density also expose
//! [`ConditionalGenerator::log_likelihood`], which is what the Bayes-rule
//! oracles in [`bayes`] run on.

use std::fmt;

use crate::error::{Error, Result};
use crate::SeededRng;

pub mod bayes;
mod gaussian;
mod memorizer;
mod noise;
mod spec;
mod truncated;

pub use bayes::{bayes_classify, bayes_posterior, BayesAccuracy, Posterior};
pub use gaussian::{Covariance, GaussianClassConditional};
pub use memorizer::{CopyMode, MemorizingGenerator};
pub use noise::{NoiseMixtureGenerator, UniformBoxGenerator};
pub use spec::GeneratorSpec;
pub use truncated::{truncated_normal_sample, AffineMap, Nonlinearity, TruncatedLatentGenerator};

pub trait ConditionalGenerator: fmt::Debug + Send + Sync {
    /// Short tag used in reports and error messages.
    fn kind(&self) -> &'static str;

    fn num_classes(&self) -> usize;

    fn dim(&self) -> usize;

    /// Draws one feature vector for `class`.
    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>>;

    /// Draws the replacement for row `slot` of a template dataset.
    ///
    /// Only generators that copy a specific source row override this.
    fn sample_for_slot(&self, class: usize, _slot: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        self.sample(class, rng)
    }

    /// Exact `ln p(x | class)` in nats.
    fn log_likelihood(&self, _x: &[f64], _class: usize) -> Result<f64> {
        Err(Error::LikelihoodUnsupported {
            generator: self.kind(),
        })
    }

    fn has_exact_likelihood(&self) -> bool {
        false
    }
}

pub(crate) fn check_class(class: usize, num_classes: usize) -> Result<()> {
    if class < num_classes {
        Ok(())
    } else {
        Err(Error::ClassOutOfRange { class, num_classes })
    }
}

pub(crate) fn check_dim(x: &[f64], dim: usize) -> Result<()> {
    if x.len() == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        })
    }
}

pub(crate) fn standard_normal(rng: &mut SeededRng) -> f64 {
    use rand::Rng;
    rng.sample(rand_distr::StandardNormal)
}

/// `ln(sum(exp(values)))`, `-inf` when every value is `-inf`.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
