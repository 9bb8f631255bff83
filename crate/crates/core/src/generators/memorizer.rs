use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_class, ConditionalGenerator};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyMode {
    /// Uniform draw with replacement among the source rows of the class.
    #[default]
    Resample,
    /// Replacement slot `i` returns source row `i` verbatim. Only meaningful
    /// when the replacement template is the source dataset itself.
    Identity,
}

/// A generator that has memorized its training set.
#[derive(Debug, Clone)]
pub struct MemorizingGenerator {
    source: Arc<LabeledDataset>,
    by_class: Vec<Vec<usize>>,
    mode: CopyMode,
}

impl MemorizingGenerator {
    pub fn new(source: Arc<LabeledDataset>, mode: CopyMode) -> Result<Self> {
        let by_class = source.class_indices();
        if let Some(empty) = by_class.iter().position(Vec::is_empty) {
            return Err(Error::InvalidGenerator(format!(
                "memorizer source has no examples of class {empty}"
            )));
        }
        Ok(Self {
            source,
            by_class,
            mode,
        })
    }

    pub fn source(&self) -> &LabeledDataset {
        &self.source
    }

    pub fn mode(&self) -> CopyMode {
        self.mode
    }
}

impl ConditionalGenerator for MemorizingGenerator {
    fn kind(&self) -> &'static str {
        "memorizer"
    }

    fn num_classes(&self) -> usize {
        self.source.num_classes()
    }

    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        check_class(class, self.num_classes())?;
        let rows = &self.by_class[class];
        let pick = rows[rng.random_range(0..rows.len())];
        Ok(self.source.row_f64(pick))
    }

    fn sample_for_slot(&self, class: usize, slot: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        match self.mode {
            CopyMode::Resample => self.sample(class, rng),
            CopyMode::Identity => {
                check_class(class, self.num_classes())?;
                if slot >= self.source.len() || self.source.label(slot) != class {
                    return Err(Error::InvalidGenerator(format!(
                        "identity copy slot {slot} does not hold a class-{class} source row"
                    )));
                }
                Ok(self.source.row_f64(slot))
            }
        }
    }
}
