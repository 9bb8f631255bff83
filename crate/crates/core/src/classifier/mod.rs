//! Softmax classifier `p(y | x)` trained by momentum SGD with linear warmup
//! and step decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod io;
mod model;
mod train;

pub use io::{load_model, save_model};
pub use model::{ClassifierModel, TopkEvaluation};
pub use train::{train, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    #[serde(alias = "rectifier")]
    Relu,
}

impl Activation {
    pub(crate) fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    pub(crate) fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Linear,
    Multilayer { hidden: Vec<usize>, activation: Activation },
}

impl Architecture {
    pub fn hidden_widths(&self) -> &[usize] {
        match self {
            Architecture::Linear => &[],
            Architecture::Multilayer { hidden, .. } => hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub warmup_epochs: usize,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    /// Small-scale analogue of the ImageNet recipe: warmup, then two step
    /// decays by 10x.
    fn default() -> Self {
        Self {
            architecture: Architecture::Multilayer {
                hidden: vec![64],
                activation: Activation::Relu,
            },
            epochs: 30,
            batch_size: 64,
            peak_lr: 0.1,
            warmup_epochs: 3,
            decay_epochs: vec![15, 25],
            decay_factor: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    /// The ResNet-50 ImageNet schedule: 90 epochs, 0 -> 0.4 over 5 warmup
    /// epochs, /10 at epochs 30, 60 and 80.
    pub fn imagenet_schedule() -> Self {
        Self {
            epochs: 90,
            peak_lr: 0.4,
            warmup_epochs: 5,
            decay_epochs: vec![30, 60, 80],
            decay_factor: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) {
            return bad(format!("peak_lr must be positive, got {}", self.peak_lr));
        }
        if self.decay_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return bad("decay_epochs must be strictly increasing".into());
        }
        if self.decay_epochs.last().is_some_and(|&e| e >= self.epochs) {
            return bad("decay_epochs must be below epochs".into());
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return bad(format!("decay_factor must lie in (0, 1), got {}", self.decay_factor));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.architecture.hidden_widths().contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }
}

/// Learning rate used throughout `epoch` (0-based).
///
/// Warmup epochs ramp linearly, `peak * (e + 1) / warmup`; afterwards the
/// rate is `peak * factor^m` with `m` the number of decay epochs `<= e`.
pub fn lr_at(config: &ClassifierConfig, epoch: usize) -> Result<f64> {
    if epoch >= config.epochs {
        return Err(Error::InvalidArgument(format!(
            "epoch {epoch} outside schedule of {} epochs",
            config.epochs
        )));
    }
    if epoch < config.warmup_epochs {
        return Ok(config.peak_lr * (epoch + 1) as f64 / config.warmup_epochs as f64);
    }
    let decays = config.decay_epochs.iter().filter(|&&d| d <= epoch).count();
    Ok(config.peak_lr * config.decay_factor.powi(decays as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imagenet_schedule_values() {
        let cfg = ClassifierConfig::imagenet_schedule();
        cfg.validate().unwrap();
        assert!((lr_at(&cfg, 0).unwrap() - 0.08).abs() < 1e-15);
        assert_eq!(lr_at(&cfg, 4).unwrap(), 0.4);
        assert_eq!(lr_at(&cfg, 29).unwrap(), 0.4);
        assert!((lr_at(&cfg, 30).unwrap() - 0.04).abs() < 1e-15);
        assert!((lr_at(&cfg, 65).unwrap() - 0.004).abs() < 1e-15);
        assert!((lr_at(&cfg, 89).unwrap() - 0.0004).abs() < 1e-15);
        assert!(lr_at(&cfg, 90).is_err());
    }

    #[test]
    fn no_warmup() {
        let cfg = ClassifierConfig {
            warmup_epochs: 0,
            ..ClassifierConfig::default()
        };
        assert_eq!(lr_at(&cfg, 0).unwrap(), cfg.peak_lr);
    }

    #[test]
    fn validation() {
        let base = ClassifierConfig::default();
        base.validate().unwrap();
        let cases = [
            ClassifierConfig { epochs: 0, ..base.clone() },
            ClassifierConfig { batch_size: 0, ..base.clone() },
            ClassifierConfig { peak_lr: 0.0, ..base.clone() },
            ClassifierConfig { decay_epochs: vec![20, 10], ..base.clone() },
            ClassifierConfig { decay_epochs: vec![30], ..base.clone() },
            ClassifierConfig { decay_factor: 1.0, ..base.clone() },
            ClassifierConfig { momentum: 1.0, ..base.clone() },
            ClassifierConfig { weight_decay: -1.0, ..base.clone() },
        ];
        for cfg in cases {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn architecture_json() {
        let a: Architecture =
            serde_json::from_str(r#"{"type":"multilayer","hidden":[8,4],"activation":"rectifier"}"#).unwrap();
        assert_eq!(
            a,
            Architecture::Multilayer {
                hidden: vec![8, 4],
                activation: Activation::Relu
            }
        );
        let l: Architecture = serde_json::from_str(r#"{"type":"linear"}"#).unwrap();
        assert_eq!(l, Architecture::Linear);
    }
}
