use crate::error::{Error, Result};

const KL_FLOOR: f64 = 1e-12;
const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// `exp(E_x KL(p(y|x) || p(y)))` per split, reported as (mean, sample std)
/// over `splits` equal-sized consecutive splits.
///
/// Rows beyond `splits * (n / splits)` are dropped. Probabilities are floored
/// at `1e-12` inside the logarithms.
pub fn inception_style_score(probs: &[Vec<f64>], splits: usize) -> Result<(f64, f64)> {
    if splits == 0 {
        return Err(Error::InvalidArgument("splits must be at least 1".into()));
    }
    let k = probs.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::InvalidArgument("no probability rows".into()));
    }
    if probs.len() < splits {
        return Err(Error::InvalidArgument(format!(
            "{} rows cannot form {splits} splits",
            probs.len()
        )));
    }
    for (i, row) in probs.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: row.len(),
            });
        }
        let total: f64 = row.iter().sum();
        if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidArgument(format!("row {i} is not a probability vector")));
        }
    }

    let size = probs.len() / splits;
    let scores: Vec<f64> = probs
        .chunks_exact(size)
        .take(splits)
        .map(|chunk| {
            let mut marginal = vec![0.0; k];
            for row in chunk {
                marginal.iter_mut().zip(row).for_each(|(m, p)| *m += p);
            }
            marginal.iter_mut().for_each(|m| *m /= chunk.len() as f64);
            let log_marginal: Vec<f64> = marginal.iter().map(|m| m.max(KL_FLOOR).ln()).collect();
            let mean_kl = chunk
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&log_marginal)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, lq)| p * (p.max(KL_FLOOR).ln() - lq))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / chunk.len() as f64;
            mean_kl.exp()
        })
        .collect();

    let mean = scores.iter().sum::<f64>() / splits as f64;
    let std = if splits > 1 {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (splits - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn one_hot(k: usize, c: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[c] = 1.0;
        v
    }

    #[test]
    fn identical_rows_score_one() {
        let rows = vec![vec![0.2, 0.5, 0.3]; 100];
        let (m, s) = inception_style_score(&rows, 10).unwrap();
        assert!((m - 1.0).abs() < 1e-6 && s.abs() < 1e-9);
    }

    #[test]
    fn one_hot_uniform_scores_k() {
        let rows: Vec<_> = (0..1000).map(|i| one_hot(10, i % 10)).collect();
        let (m, _) = inception_style_score(&rows, 10).unwrap();
        assert!((m - 10.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn single_class_collapse_scores_one() {
        let rows = vec![one_hot(10, 0); 500];
        let (m, _) = inception_style_score(&rows, 5).unwrap();
        assert!((m - 1.0).abs() < 1e-6);
    }

    #[test]
    fn random_rows_within_bounds() {
        let mut rng = seeded_rng(3);
        for k in [2, 5, 10] {
            let rows: Vec<Vec<f64>> = (0..237)
                .map(|_| {
                    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(4)).collect();
                    let t: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / t).collect()
                })
                .collect();
            let (m, _) = inception_style_score(&rows, 7).unwrap();
            assert!(m >= 1.0 - 1e-6 && m <= k as f64 + 1e-6, "{m}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(inception_style_score(&[vec![0.5, 0.6]], 1).is_err());
        assert!(inception_style_score(&[vec![0.5, 0.5]], 2).is_err());
        assert!(inception_style_score(&[vec![0.5, 0.5]], 0).is_err());
    }
}
