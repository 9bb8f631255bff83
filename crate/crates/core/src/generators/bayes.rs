//! Exact inference `p(y | x) = p(x | y) p(y) / p(x)` for generators that
//! expose their conditional density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::check_priors;
use super::ConditionalGenerator;
use crate::dataset::{class_histogram, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub probs: Vec<f64>,
    /// Every class had zero joint density at `x`; `probs` is uniform.
    pub degenerate: bool,
}

impl Posterior {
    /// Highest-probability class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (c, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = c;
            }
        }
        best
    }
}

/// Normalizes log joint densities with max subtraction.
pub fn posterior_from_log_joint(log_joint: &[f64]) -> Posterior {
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let k = log_joint.len();
        return Posterior {
            probs: vec![1.0 / k as f64; k],
            degenerate: true,
        };
    }
    let weights: Vec<f64> = log_joint.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Posterior {
        probs: weights.into_iter().map(|w| w / total).collect(),
        degenerate: false,
    }
}

pub fn bayes_posterior(gen: &dyn ConditionalGenerator, x: &[f64], priors: &[f64]) -> Result<Posterior> {
    let k = gen.num_classes();
    check_priors(priors, k)?;
    let log_joint = (0..k)
        .map(|c| Ok(gen.log_likelihood(x, c)? + priors[c].ln()))
        .collect::<Result<Vec<_>>>()?;
    Ok(posterior_from_log_joint(&log_joint))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesAccuracy {
    pub accuracy: f64,
    /// `None` for classes absent from the evaluated set.
    pub per_class: Vec<Option<f64>>,
    pub degenerate_points: usize,
}

/// Top-1 accuracy of the Bayes-rule classifier on `ds`.
pub fn bayes_classify(gen: &dyn ConditionalGenerator, ds: &LabeledDataset, priors: &[f64]) -> Result<BayesAccuracy> {
    if !gen.has_exact_likelihood() {
        return Err(Error::LikelihoodUnsupported { generator: gen.kind() });
    }
    if gen.num_classes() != ds.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "generator has {} classes, dataset {}",
            gen.num_classes(),
            ds.num_classes()
        )));
    }
    let predictions = (0..ds.len())
        .into_par_iter()
        .map(|i| bayes_posterior(gen, &ds.row_f64(i), priors))
        .collect::<Result<Vec<_>>>()?;
    let k = ds.num_classes();
    let mut correct = vec![0usize; k];
    let mut degenerate_points = 0;
    for (i, post) in predictions.iter().enumerate() {
        if post.argmax() == ds.label(i) {
            correct[ds.label(i)] += 1;
        }
        degenerate_points += usize::from(post.degenerate);
    }
    let counts = class_histogram(ds);
    Ok(BayesAccuracy {
        accuracy: correct.iter().sum::<usize>() as f64 / ds.len() as f64,
        per_class: counts
            .iter()
            .zip(&correct)
            .map(|(&n, &c)| (n > 0).then(|| c as f64 / n as f64))
            .collect(),
        degenerate_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{GaussianClassConditional, NoiseMixtureGenerator};
    use crate::seeded_rng;

    fn pm_one() -> GaussianClassConditional {
        GaussianClassConditional::isotropic(vec![vec![-1.0], vec![1.0]], 1.0).unwrap()
    }

    #[test]
    fn equal_means_give_prior() {
        let g = GaussianClassConditional::isotropic(vec![vec![0.5, 0.5]; 3], 1.0).unwrap();
        let priors = [0.2, 0.3, 0.5];
        let p = bayes_posterior(&g, &[3.0, -1.0], &priors).unwrap();
        for (a, b) in p.probs.iter().zip(priors) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_point_is_even() {
        let p = bayes_posterior(&pm_one(), &[0.0], &[0.5, 0.5]).unwrap();
        assert!((p.probs[0] - 0.5).abs() < 1e-12);
    }

    // Oracle: integrate each class density over a small interval around x
    // with the trapezoid rule and take the ratio.
    #[test]
    fn posterior_matches_numerical_integration() {
        let density = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp();
        let (lo, hi, steps) = (0.999, 1.001, 1000);
        let h = (hi - lo) / steps as f64;
        let integrate = |m: f64| {
            (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                    w * density(lo + i as f64 * h, m)
                })
                .sum::<f64>()
                * h
        };
        let (plus, minus) = (integrate(1.0), integrate(-1.0));
        let oracle = plus / (plus + minus);
        let p = bayes_posterior(&pm_one(), &[1.0], &[0.5, 0.5]).unwrap();
        assert!((p.probs[1] - oracle).abs() < 1e-6, "{} vs {oracle}", p.probs[1]);
        assert!((p.probs[1] - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn disjoint_densities_flagged() {
        let g = crate::generators::UniformBoxGenerator::new(2, vec![0.0], vec![1.0]).unwrap();
        let p = bayes_posterior(&g, &[5.0], &[0.5, 0.5]).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn noise_mixture_preserves_base_posterior() {
        let base = GaussianClassConditional::isotropic(vec![vec![-1.0, 0.0], vec![1.0, 1.0], vec![0.0, -2.0]], 1.0)
            .unwrap();
        let mix = NoiseMixtureGenerator::new(Box::new(base.clone()), 0.4, vec![50.0, 50.0], vec![52.0, 52.0]).unwrap();
        let priors = [0.2, 0.5, 0.3];
        let mut rng = seeded_rng(8);
        for i in 0..200 {
            let x = base.sample(i % 3, &mut rng).unwrap();
            let a = bayes_posterior(&base, &x, &priors).unwrap();
            let b = bayes_posterior(&mix, &x, &priors).unwrap();
            for (u, v) in a.probs.iter().zip(&b.probs) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prior_on_one_class_predicts_it() {
        let g = pm_one();
        let mut rng = seeded_rng(2);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..300 {
            let c = usize::from(i % 3 == 0);
            rows.push(crate::generators::ConditionalGenerator::sample(&g, c, &mut rng).unwrap());
            labels.push(c as u32);
        }
        let ds = LabeledDataset::from_rows("t", &rows, labels, 2).unwrap();
        let acc = bayes_classify(&g, &ds, &[1.0, 0.0]).unwrap();
        let frac0 = class_histogram(&ds)[0] as f64 / ds.len() as f64;
        assert!((acc.accuracy - frac0).abs() < 1e-12);
        assert_eq!(acc.per_class, vec![Some(1.0), Some(0.0)]);
    }

    #[test]
    fn unsupported_generator() {
        let src = LabeledDataset::new("s", vec![0.0, 1.0], vec![0, 1], 1, 2).unwrap();
        let m = crate::generators::MemorizingGenerator::new(
            std::sync::Arc::new(src.clone()),
            crate::generators::CopyMode::Resample,
        )
        .unwrap();
        assert!(bayes_classify(&m, &src, &[0.5, 0.5]).is_err());
    }
}
