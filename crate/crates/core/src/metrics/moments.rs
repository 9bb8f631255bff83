use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues of magnitude below this (and every negative eigenvalue) are
/// treated as zero by [`sqrtm_psd`].
pub const EIGEN_CLAMP_TOLERANCE: f64 = 1e-10;

/// FID values in `[-FID_CLAMP_TOLERANCE, 0)` are reported as 0.
pub const FID_CLAMP_TOLERANCE: f64 = 1e-6;

const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// First two moments of a feature sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStats {
    pub mean: DVector<f64>,
    /// Unbiased (`n - 1`) sample covariance.
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl MomentStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Mean and unbiased covariance of the rows of `features`.
pub fn moment_stats(features: &DMatrix<f64>) -> Result<MomentStats> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment statistics need at least 2 rows, got {n}"
        )));
    }
    let mean = features.row_mean().transpose();
    let mut centered = features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n - 1) as f64;
    // exact symmetry
    for i in 0..cov.nrows() {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(MomentStats { mean, cov, n })
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!("matrix {:?} is not square", a.shape())));
    }
    let asym = (a - a.transpose()).abs().max();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Principal square root of a symmetric positive semidefinite matrix via
/// symmetric eigendecomposition; negative eigenvalues are clamped to 0.
pub fn sqrtm_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a)?;
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| if l > EIGEN_CLAMP_TOLERANCE { l.sqrt() } else { 0.0 });
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&roots);
    let r = scaled * v.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// Frechet distance between Gaussians with the given moments:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The cross term is evaluated as `tr(sqrtm(S_a^(1/2) S_b S_a^(1/2)))`, which
/// has the same trace but stays symmetric.
pub fn fid(a: &MomentStats, b: &MomentStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let root_a = sqrtm_psd(&a.cov)?;
    let inner = &root_a * &b.cov * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross = sqrtm_psd(&inner)?.trace();
    let value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(if (-FID_CLAMP_TOLERANCE..0.0).contains(&value) { 0.0 } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn exact(mean: &[f64], cov: DMatrix<f64>) -> MomentStats {
        MomentStats {
            mean: DVector::from_column_slice(mean),
            cov,
            n: 1_000_000,
        }
    }

    #[test]
    fn two_point_moments() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let s = moment_stats(&x).unwrap();
        assert_eq!(s.mean.as_slice(), &[1.0, 0.0]);
        assert_eq!(s.cov, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        assert!(moment_stats(&DMatrix::zeros(1, 2)).is_err());
        let constant = DMatrix::from_element(5, 3, 1.5);
        assert_eq!(moment_stats(&constant).unwrap().cov, DMatrix::zeros(3, 3));
    }

    #[test]
    fn sample_covariance_converges() {
        let mut rng = seeded_rng(4);
        let n = 20_000;
        let x = DMatrix::from_fn(n, 2, |_, j| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            if j == 0 { z } else { 2.0 * z }
        });
        let s = moment_stats(&x).unwrap();
        assert!((s.cov[(0, 0)] - 1.0).abs() < 0.05);
        assert!((s.cov[(1, 1)] - 4.0).abs() < 0.2);
        assert!(s.cov[(0, 1)].abs() < 0.1);
    }

    #[test]
    fn sqrtm_basic() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert!((sqrtm_psd(&eye).unwrap() - &eye).abs().max() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrtm_psd(&d).unwrap();
        assert!((r - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))).abs().max() < 1e-12);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(sqrtm_psd(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sqrtm_reconstructs_random_spd() {
        let mut rng = seeded_rng(12);
        for trial in 0..25 {
            let d = 1 + trial % 7;
            let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-2.0..2.0));
            let a = &b * b.transpose();
            let r = sqrtm_psd(&a).unwrap();
            let err = (&r * &r - &a).norm();
            assert!(err <= 1e-6 * (1.0 + a.norm()), "d={d}: {err}");
        }
    }

    #[test]
    fn fid_closed_forms() {
        let one = DMatrix::from_element(1, 1, 1.0);
        assert!((fid(&exact(&[0.0], one.clone()), &exact(&[1.0], one)).unwrap() - 1.0).abs() < 1e-9);
        let eye = DMatrix::identity(2, 2);
        let four = DMatrix::identity(2, 2) * 4.0;
        assert!((fid(&exact(&[0.0, 0.0], eye), &exact(&[0.0, 0.0], four)).unwrap() - 2.0).abs() < 1e-9);
        // (mu1 - mu2)^2 + (s1 - s2)^2 in one dimension
        let a = exact(&[0.3], DMatrix::from_element(1, 1, 2.25));
        let b = exact(&[-0.2], DMatrix::from_element(1, 1, 0.49));
        assert!((fid(&a, &b).unwrap() - (0.25 + 0.64)).abs() < 1e-12);
    }

    #[test]
    fn fid_symmetry_identity_and_rotation() {
        let mut rng = seeded_rng(21);
        let sample = |rng: &mut crate::SeededRng, shift: f64| {
            DMatrix::from_fn(400, 3, |_, j| rng.sample::<f64, _>(rand_distr::StandardNormal) * (1.0 + j as f64) + shift)
        };
        let xa = sample(&mut rng, 0.0);
        let xb = sample(&mut rng, 0.5);
        let (a, b) = (moment_stats(&xa).unwrap(), moment_stats(&xb).unwrap());
        let ab = fid(&a, &b).unwrap();
        assert!((ab - fid(&b, &a).unwrap()).abs() < 1e-9);
        assert!(fid(&a, &a).unwrap().abs() < 1e-9);

        let (c, s) = (0.6_f64, 0.8_f64);
        let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let ra = moment_stats(&(&xa * &rot)).unwrap();
        let rb = moment_stats(&(&xb * &rot)).unwrap();
        assert!((fid(&ra, &rb).unwrap() - ab).abs() < 1e-6);
    }

    #[test]
    fn fid_dimension_mismatch() {
        let a = exact(&[0.0], DMatrix::identity(1, 1));
        let b = exact(&[0.0, 0.0], DMatrix::identity(2, 2));
        assert!(matches!(fid(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
