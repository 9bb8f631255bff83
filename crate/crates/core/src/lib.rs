//! Evaluation of class-conditional generators by approximate inference.
//!
//! A classifier is trained on generator samples and scored on held-out real
//! data (Classification Accuracy Score), next to the classical sample-statistics
//! metrics (Inception-style score, FID, KID). Reference generators with exact
//! likelihoods provide Bayes-rule oracles for every comparison.

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod generators;
pub mod metrics;
pub mod seed;

pub use classifier::{Architecture, Activation, ClassifierConfig, ClassifierModel, TrainingTrace};
pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use generators::{ConditionalGenerator, GeneratorSpec};

/// Random source used everywhere a seed enters the toolkit.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the toolkit's random source from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
