use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Architecture;
use crate::dataset::{class_histogram, LabeledDataset};
use crate::error::{Error, Result};
use crate::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub(crate) inputs: usize,
    pub(crate) outputs: usize,
    /// Row-major `outputs x inputs`.
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn glorot(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, input: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Indices of the `k` largest entries, descending; ties keep the lower index first.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopkEvaluation {
    pub k: usize,
    pub accuracy: f64,
    /// `None` when the class has no examples in the evaluated set.
    pub per_class: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
}

/// Per-example forward activations; `acts[0]` is the standardized input and
/// `acts[last]` the logits.
pub(crate) struct Scratch {
    pub(crate) acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

/// Multilayer (or linear) softmax classifier with baked-in input standardization.
///
/// Parameters flatten layer by layer, each layer as its row-major
/// `outputs x inputs` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub(crate) architecture: Architecture,
    pub(crate) layers: Vec<Dense>,
    pub(crate) input_mean: Vec<f64>,
    pub(crate) input_scale: Vec<f64>,
    pub(crate) num_classes: usize,
}

fn layer_sizes(architecture: &Architecture, dim: usize, num_classes: usize) -> Vec<usize> {
    let mut sizes = vec![dim];
    sizes.extend_from_slice(architecture.hidden_widths());
    sizes.push(num_classes);
    sizes
}

impl ClassifierModel {
    /// All-zero parameters and identity standardization; predicts uniformly.
    pub fn zeros(architecture: Architecture, dim: usize, num_classes: usize) -> Self {
        let sizes = layer_sizes(&architecture, dim, num_classes);
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            architecture,
            input_mean: vec![0.0; dim],
            input_scale: vec![1.0; dim],
            num_classes,
        }
    }

    /// Glorot-uniform weights and zero biases drawn from `rng`, layer by layer.
    pub fn initialized(
        architecture: Architecture,
        input_mean: Vec<f64>,
        input_scale: Vec<f64>,
        num_classes: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let sizes = layer_sizes(&architecture, input_mean.len(), num_classes);
        Self {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
            architecture,
            input_mean,
            input_scale,
            num_classes,
        }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_mean(&self) -> &[f64] {
        &self.input_mean
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let (w, b) = (layer.weights.len(), layer.bias.len());
            layer.weights.copy_from_slice(&params[offset..offset + w]);
            layer.bias.copy_from_slice(&params[offset + w..offset + w + b]);
            offset += w + b;
        }
        Ok(())
    }

    fn activation(&self) -> Option<super::Activation> {
        match &self.architecture {
            Architecture::Linear => None,
            Architecture::Multilayer { activation, .. } => Some(*activation),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub(crate) fn scratch(&self) -> Scratch {
        let mut acts = vec![vec![0.0; self.dim()]];
        acts.extend(self.layers.iter().map(|l| vec![0.0; l.outputs]));
        let deltas = self.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        Scratch { acts, deltas }
    }

    /// Forward pass from an already standardized input stored in `acts[0]`.
    pub(crate) fn forward_standardized(&self, scratch: &mut Scratch) {
        let act = self.activation();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.acts.split_at_mut(l + 1);
            let out = &mut rest[0];
            layer.forward(&done[l], out);
            if l < last {
                if let Some(a) = act {
                    out.iter_mut().for_each(|v| *v = a.apply(*v));
                }
            }
        }
    }

    fn forward_into(&self, x: &[f64], scratch: &mut Scratch) -> Result<()> {
        self.check_input(x)?;
        for (slot, ((v, m), s)) in scratch.acts[0]
            .iter_mut()
            .zip(x.iter().zip(&self.input_mean).zip(&self.input_scale))
        {
            *slot = (v - m) / s;
        }
        self.forward_standardized(scratch);
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = self.scratch();
        self.forward_into(x, &mut scratch)?;
        Ok(scratch.acts.pop().expect("at least one layer"))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict_topk(&self, x: &[f64], k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.num_classes {
            return Err(Error::InvalidArgument(format!(
                "k must lie in [1, {}], got {k}",
                self.num_classes
            )));
        }
        Ok(top_k_indices(&self.predict_proba(x)?, k))
    }

    /// Class probabilities for every row of `ds`, in row order.
    pub fn predict_proba_all(&self, ds: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
        self.check_input(&vec![0.0; ds.dim()])?;
        (0..ds.len())
            .into_par_iter()
            .map(|i| self.predict_proba(&ds.row_f64(i)))
            .collect()
    }

    pub fn evaluate_topk(&self, ds: &LabeledDataset, k: usize) -> Result<TopkEvaluation> {
        if k == 0 || k > self.num_classes {
            return Err(Error::InvalidArgument(format!(
                "k must lie in [1, {}], got {k}",
                self.num_classes
            )));
        }
        if ds.num_classes() != self.num_classes {
            return Err(Error::InvalidArgument(format!(
                "model has {} classes, dataset {}",
                self.num_classes,
                ds.num_classes()
            )));
        }
        let hits = (0..ds.len())
            .into_par_iter()
            .map(|i| {
                let top = self.predict_topk(&ds.row_f64(i), k)?;
                Ok(top.contains(&ds.label(i)))
            })
            .collect::<Result<Vec<bool>>>()?;
        let mut correct = vec![0usize; self.num_classes];
        for (i, hit) in hits.into_iter().enumerate() {
            if hit {
                correct[ds.label(i)] += 1;
            }
        }
        let class_counts = class_histogram(ds);
        Ok(TopkEvaluation {
            k,
            accuracy: correct.iter().sum::<usize>() as f64 / ds.len() as f64,
            per_class: class_counts
                .iter()
                .zip(&correct)
                .map(|(&n, &c)| (n > 0).then(|| c as f64 / n as f64))
                .collect(),
            class_counts,
        })
    }

    /// Width of [`Self::hidden_features`].
    pub fn penultimate_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").inputs
    }

    /// Activation feeding the output layer: the last hidden layer, or the
    /// standardized input for a linear model.
    pub fn hidden_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = self.scratch();
        self.forward_into(x, &mut scratch)?;
        let n = scratch.acts.len();
        Ok(std::mem::take(&mut scratch.acts[n - 2]))
    }

    pub(crate) fn weight_penalty(&self, weight_decay: f64) -> f64 {
        if weight_decay == 0.0 {
            return 0.0;
        }
        0.5 * weight_decay
            * self
                .layers
                .iter()
                .flat_map(|l| &l.weights)
                .map(|w| w * w)
                .sum::<f64>()
    }

    /// Accumulates `scale * d CE / d params` for one standardized example
    /// (already in `scratch.acts[0]`) into `grad`; returns the example's
    /// cross-entropy.
    pub(crate) fn accumulate_example(&self, label: usize, scale: f64, scratch: &mut Scratch, grad: &mut [f64]) -> f64 {
        self.forward_standardized(scratch);
        let last = self.layers.len() - 1;
        let logits = &scratch.acts[last + 1];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        let loss = log_norm - logits[label];
        for (c, d) in scratch.deltas[last].iter_mut().enumerate() {
            let p = (logits[c] - log_norm).exp();
            *d = p - if c == label { 1.0 } else { 0.0 };
        }

        let act = self.activation();
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            offsets.push(offset);
            offset += layer.param_count();
        }
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &scratch.acts[l];
            let delta = &scratch.deltas[l];
            let base = offsets[l];
            for (o, &dz) in delta.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                let g = &mut grad[base + o * layer.inputs..base + (o + 1) * layer.inputs];
                for (gi, xi) in g.iter_mut().zip(input) {
                    *gi += scale * dz * xi;
                }
                grad[base + layer.weights.len() + o] += scale * dz;
            }
            if l > 0 {
                let a = act.expect("hidden layers imply an activation");
                let (before, after) = scratch.deltas.split_at_mut(l);
                let upstream = &after[0];
                let prev = &mut before[l - 1];
                for (i, slot) in prev.iter_mut().enumerate() {
                    let back: f64 = upstream
                        .iter()
                        .enumerate()
                        .map(|(o, dz)| layer.weights[o * layer.inputs + i] * dz)
                        .sum();
                    *slot = back * a.derivative_from_output(scratch.acts[l][i]);
                }
            }
        }
        loss
    }

    pub(crate) fn add_weight_decay_gradient(&self, weight_decay: f64, grad: &mut [f64]) {
        if weight_decay == 0.0 {
            return;
        }
        let mut offset = 0;
        for layer in &self.layers {
            for (g, w) in grad[offset..offset + layer.weights.len()].iter_mut().zip(&layer.weights) {
                *g += weight_decay * w;
            }
            offset += layer.param_count();
        }
    }

    /// Mean cross-entropy over the batch plus `0.5 * weight_decay * |W|^2`
    /// (weights only), and its gradient in the flattened parameter order.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], labels: &[usize], weight_decay: f64) -> Result<(f64, Vec<f64>)> {
        if xs.is_empty() || xs.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "batch needs matching nonempty rows and labels, got {} and {}",
                xs.len(),
                labels.len()
            )));
        }
        let mut grad = vec![0.0; self.param_count()];
        let mut scratch = self.scratch();
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(labels) {
            self.check_input(x)?;
            if y >= self.num_classes {
                return Err(Error::ClassOutOfRange {
                    class: y,
                    num_classes: self.num_classes,
                });
            }
            scratch.acts[0] = self.standardize(x);
            loss += self.accumulate_example(y, scale, &mut scratch, &mut grad);
        }
        self.add_weight_decay_gradient(weight_decay, &mut grad);
        Ok((loss * scale + self.weight_penalty(weight_decay), grad))
    }
}
