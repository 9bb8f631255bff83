use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial kernel `(scale * <x, y> + coef)^degree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KidParams {
    pub degree: i32,
    pub coef: f64,
    /// `None` means `1 / M` for `M`-dimensional features.
    pub scale: Option<f64>,
}

impl Default for KidParams {
    fn default() -> Self {
        Self {
            degree: 3,
            coef: 1.0,
            scale: None,
        }
    }
}

pub fn polynomial_kernel(x: &[f64], y: &[f64], params: &KidParams) -> f64 {
    let scale = params.scale.unwrap_or(1.0 / x.len() as f64);
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (scale * dot + params.coef).powi(params.degree)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Unbiased squared MMD between the row sets `a` and `b`; the diagonal is
/// excluded from both within-set averages.
pub fn kid(a: &DMatrix<f64>, b: &DMatrix<f64>, params: &KidParams) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    let (m, n) = (a.nrows(), b.nrows());
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument("KID needs at least 2 rows per set".into()));
    }
    let (ra, rb) = (rows(a), rows(b));
    let within = |set: &[Vec<f64>]| -> f64 {
        let partial: Vec<f64> = (0..set.len())
            .into_par_iter()
            .map(|i| (i + 1..set.len()).map(|j| polynomial_kernel(&set[i], &set[j], params)).sum())
            .collect();
        2.0 * partial.iter().sum::<f64>()
    };
    let cross: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| rb.iter().map(|y| polynomial_kernel(&ra[i], y, params)).sum())
        .collect();
    let kaa = within(&ra) / (m * (m - 1)) as f64;
    let kbb = within(&rb) / (n * (n - 1)) as f64;
    let kab = cross.iter().sum::<f64>() / (m * n) as f64;
    Ok(kaa + kbb - 2.0 * kab)
}
