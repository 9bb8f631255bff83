use crate::error::{Error, Result};

/// Mean over examples of `sum_k (p_k - onehot_k)^2`.
pub fn brier_score(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.is_empty() || probs.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} probability rows for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (row, &y) in probs.iter().zip(labels) {
        if y >= row.len() {
            return Err(Error::ClassOutOfRange {
                class: y,
                num_classes: row.len(),
            });
        }
        total += row
            .iter()
            .enumerate()
            .map(|(c, p)| (p - if c == y { 1.0 } else { 0.0 }).powi(2))
            .sum::<f64>();
    }
    Ok(total / probs.len() as f64)
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs two equal-length series of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brier_closed_forms() {
        let perfect = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(brier_score(&perfect, &[0, 2]).unwrap(), 0.0);
        assert!((brier_score(&[vec![0.5, 0.5]], &[1]).unwrap() - 0.5).abs() < 1e-15);
        for k in [3usize, 7, 10] {
            let rows = vec![vec![1.0 / k as f64; k]; 4];
            let b = brier_score(&rows, &[0, 1, 2, 0]).unwrap();
            assert!((b - (k as f64 - 1.0) / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn proper_score_separates_equal_accuracy() {
        // Both predictors put the most mass on the true class.
        let confident = brier_score(&[vec![1.0, 0.0]], &[0]).unwrap();
        let hesitant = brier_score(&[vec![0.51, 0.49]], &[0]).unwrap();
        assert_eq!(confident, 0.0);
        assert!((hesitant - 2.0 * 0.49 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn pearson_extremes() {
        let xs = [1.0, 2.0, 3.5, -1.0, 0.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&xs, &[1.0; 5]), Err(Error::ZeroVariance)));
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }
}
