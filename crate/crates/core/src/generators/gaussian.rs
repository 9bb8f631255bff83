use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{check_class, check_dim, standard_normal, ConditionalGenerator};
use crate::error::{Error, Result};
use crate::SeededRng;

/// Smallest admissible covariance eigenvalue for full covariances.
pub const MIN_EIGENVALUE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum Covariance {
    /// Shared `sigma^2 * I`.
    Isotropic(f64),
    /// One SPD matrix per class.
    Full(Vec<DMatrix<f64>>),
}

#[derive(Debug, Clone)]
struct ClassFactor {
    // lower Cholesky factor; None for the isotropic case
    chol: Option<DMatrix<f64>>,
    log_det: f64,
}

/// `x | y ~ N(mean_y, cov_y)`.
#[derive(Debug, Clone)]
pub struct GaussianClassConditional {
    means: Vec<DVector<f64>>,
    covariance: Covariance,
    priors: Vec<f64>,
    factors: Vec<ClassFactor>,
}

pub(crate) fn check_priors(priors: &[f64], k: usize) -> Result<()> {
    if priors.len() != k {
        return Err(Error::InvalidArgument(format!(
            "{} priors for {k} classes",
            priors.len()
        )));
    }
    if priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument("priors must be non-negative".into()));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "priors sum to {total}, not 1"
        )));
    }
    Ok(())
}

impl GaussianClassConditional {
    pub fn new(means: Vec<Vec<f64>>, covariance: Covariance, priors: Option<Vec<f64>>) -> Result<Self> {
        let k = means.len();
        if k < 2 {
            return Err(Error::InvalidGenerator("gaussian needs at least 2 classes".into()));
        }
        let d = means[0].len();
        if d == 0 || means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidGenerator("class means must share a nonzero dimension".into()));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGenerator("non-finite class mean".into()));
        }
        let priors = priors.unwrap_or_else(|| vec![1.0 / k as f64; k]);
        check_priors(&priors, k)?;

        let factors = match &covariance {
            Covariance::Isotropic(sigma) => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidGenerator(format!("sigma must be positive, got {sigma}")));
                }
                let f = ClassFactor {
                    chol: None,
                    log_det: 2.0 * d as f64 * sigma.ln(),
                };
                vec![f; k]
            }
            Covariance::Full(covs) => {
                if covs.len() != k {
                    return Err(Error::InvalidGenerator(format!(
                        "{} covariances for {k} classes",
                        covs.len()
                    )));
                }
                covs.iter()
                    .enumerate()
                    .map(|(c, cov)| factor(c, cov, d))
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            means: means.into_iter().map(DVector::from_vec).collect(),
            covariance,
            priors,
            factors,
        })
    }

    pub fn isotropic(means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        Self::new(means, Covariance::Isotropic(sigma), None)
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }
}

fn factor(class: usize, cov: &DMatrix<f64>, d: usize) -> Result<ClassFactor> {
    if cov.shape() != (d, d) {
        return Err(Error::InvalidGenerator(format!(
            "covariance {class} has shape {:?}, expected ({d}, {d})",
            cov.shape()
        )));
    }
    let asym = (cov - cov.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + cov.abs().max()) {
        return Err(Error::NotSymmetric(asym));
    }
    let min_eig = cov.clone().symmetric_eigenvalues().min();
    if !(min_eig >= MIN_EIGENVALUE) {
        return Err(Error::InvalidGenerator(format!(
            "covariance {class} has eigenvalue {min_eig:e} below {MIN_EIGENVALUE:e}"
        )));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidGenerator(format!("covariance {class} is not positive definite")))?
        .unpack();
    let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(ClassFactor {
        chol: Some(chol),
        log_det,
    })
}

impl ConditionalGenerator for GaussianClassConditional {
    fn kind(&self) -> &'static str {
        "gaussian"
    }

    fn num_classes(&self) -> usize {
        self.means.len()
    }

    fn dim(&self) -> usize {
        self.means[0].len()
    }

    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        check_class(class, self.num_classes())?;
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| standard_normal(rng));
        let noise = match (&self.covariance, &self.factors[class].chol) {
            (Covariance::Isotropic(sigma), _) => z * *sigma,
            (Covariance::Full(_), Some(l)) => l * z,
            (Covariance::Full(_), None) => unreachable!("full covariance always has a factor"),
        };
        Ok((&self.means[class] + noise).iter().copied().collect())
    }

    fn log_likelihood(&self, x: &[f64], class: usize) -> Result<f64> {
        check_class(class, self.num_classes())?;
        check_dim(x, self.dim())?;
        let d = self.dim();
        let diff = DVector::from_column_slice(x) - &self.means[class];
        let f = &self.factors[class];
        let quad = match (&self.covariance, &f.chol) {
            (Covariance::Isotropic(sigma), _) => diff.norm_squared() / (sigma * sigma),
            (Covariance::Full(_), Some(l)) => {
                let y = l
                    .solve_lower_triangular(&diff)
                    .expect("cholesky factor has a positive diagonal");
                y.norm_squared()
            }
            (Covariance::Full(_), None) => unreachable!(),
        };
        Ok(-0.5 * (d as f64 * (2.0 * PI).ln() + f.log_det + quad))
    }

    fn has_exact_likelihood(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn standard_normal_density_at_zero() {
        let g = GaussianClassConditional::isotropic(vec![vec![0.0], vec![5.0]], 1.0).unwrap();
        let ll = g.log_likelihood(&[0.0], 0).unwrap();
        assert!((ll - (-0.5 * (2.0 * PI).ln())).abs() < 1e-12);
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn two_dim_density_at_mean() {
        let cov = DMatrix::identity(2, 2);
        let g = GaussianClassConditional::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            Covariance::Full(vec![cov.clone(), cov]),
            None,
        )
        .unwrap();
        let ll = g.log_likelihood(&[1.0, 0.0], 0).unwrap();
        assert!((ll + (2.0 * PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn full_and_isotropic_agree() {
        let sigma: f64 = 0.7;
        let cov = DMatrix::identity(3, 3) * (sigma * sigma);
        let means = vec![vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.5]];
        let full =
            GaussianClassConditional::new(means.clone(), Covariance::Full(vec![cov.clone(), cov]), None).unwrap();
        let iso = GaussianClassConditional::isotropic(means, sigma).unwrap();
        let x = [0.4, -0.3, 2.0];
        for c in 0..2 {
            let a = full.log_likelihood(&x, c).unwrap();
            let b = iso.log_likelihood(&x, c).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn tiny_sigma_collapses_to_mean() {
        let g = GaussianClassConditional::isotropic(vec![vec![1.0, -2.0], vec![3.0, 4.0]], 1e-9).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let x = g.sample(1, &mut rng).unwrap();
            assert!((x[0] - 3.0).abs() < 1e-6 && (x[1] - 4.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_and_bad_inputs() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let eye = DMatrix::identity(2, 2);
        let means = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(GaussianClassConditional::new(means.clone(), Covariance::Full(vec![singular, eye.clone()]), None).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            GaussianClassConditional::new(means.clone(), Covariance::Full(vec![asym, eye.clone()]), None),
            Err(Error::NotSymmetric(_))
        ));
        assert!(GaussianClassConditional::new(means.clone(), Covariance::Isotropic(1.0), Some(vec![0.5, 0.6])).is_err());
        assert!(GaussianClassConditional::isotropic(means.clone(), 0.0).is_err());
        let g = GaussianClassConditional::isotropic(means, 1.0).unwrap();
        assert!(matches!(g.sample(2, &mut seeded_rng(0)), Err(Error::ClassOutOfRange { .. })));
        assert!(g.log_likelihood(&[0.0], 0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let g = GaussianClassConditional::isotropic(vec![vec![0.0; 4], vec![1.0; 4]], 1.0).unwrap();
        let a = g.sample(0, &mut seeded_rng(9)).unwrap();
        let b = g.sample(0, &mut seeded_rng(9)).unwrap();
        assert_eq!(a, b);
    }
}
