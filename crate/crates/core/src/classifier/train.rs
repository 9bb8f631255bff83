use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{lr_at, ClassifierConfig, ClassifierModel};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Mean cross-entropy of the initialized model over the training set.
    pub initial_loss: f64,
    /// Mean cross-entropy over each epoch's minibatches (before each update).
    pub epoch_loss: Vec<f64>,
    pub epoch_lr: Vec<f64>,
    /// Mean cross-entropy of the final model over the training set.
    pub final_loss: f64,
    pub final_train_accuracy: f64,
}

fn standardization(ds: &LabeledDataset) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (ds.len(), ds.dim());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(ds.row(i)) {
            *m += f64::from(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((s, &v), m) in var.iter_mut().zip(ds.row(i)).zip(&mean) {
            *s += (f64::from(v) - m).powi(2);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

fn full_loss_and_accuracy(model: &ClassifierModel, inputs: &[Vec<f64>], labels: &[usize]) -> (f64, f64) {
    let mut scratch = model.scratch();
    let mut loss = 0.0;
    let mut correct = 0usize;
    let last = model.layers.len();
    for (x, &y) in inputs.iter().zip(labels) {
        scratch.acts[0].copy_from_slice(x);
        model.forward_standardized(&mut scratch);
        let logits = &scratch.acts[last];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += log_norm - logits[y];
        let top = super::model::top_k_indices(logits, 1)[0];
        correct += usize::from(top == y);
    }
    (loss / inputs.len() as f64, correct as f64 / inputs.len() as f64)
}

/// Trains a classifier on `ds` with momentum SGD.
///
/// Determinism: one ChaCha stream seeded by `config.seed` supplies the
/// initialization and then every epoch's shuffle. Standardization uses the
/// statistics of `ds` itself.
pub fn train(ds: &LabeledDataset, config: &ClassifierConfig) -> Result<(ClassifierModel, TrainingTrace)> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let (mean, scale) = standardization(ds);
    let mut model = ClassifierModel::initialized(
        config.architecture.clone(),
        mean,
        scale,
        ds.num_classes(),
        &mut rng,
    );
    let inputs: Vec<Vec<f64>> = (0..ds.len()).map(|i| model.standardize(&ds.row_f64(i))).collect();
    let labels: Vec<usize> = (0..ds.len()).map(|i| ds.label(i)).collect();
    let (initial_loss, _) = full_loss_and_accuracy(&model, &inputs, &labels);

    let mut params = model.params();
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut scratch = model.scratch();
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut epoch_lr = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = lr_at(config, epoch)?;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                scratch.acts[0].copy_from_slice(&inputs[i]);
                batch_loss += model.accumulate_example(labels[i], scale, &mut scratch, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: batch_loss * scale,
                });
            }
            total += batch_loss;
            model.add_weight_decay_gradient(config.weight_decay, &mut grad);
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v + g;
                *p -= lr * *v;
            }
            model.set_params(&params)?;
        }
        let mean_loss = total / ds.len() as f64;
        if !mean_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, loss: mean_loss });
        }
        epoch_loss.push(mean_loss);
        epoch_lr.push(lr);
    }

    let (final_loss, final_train_accuracy) = full_loss_and_accuracy(&model, &inputs, &labels);
    Ok((
        model,
        TrainingTrace {
            initial_loss,
            epoch_loss,
            epoch_lr,
            final_loss,
            final_train_accuracy,
        },
    ))
}
