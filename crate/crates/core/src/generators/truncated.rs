use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_class, standard_normal, ConditionalGenerator};
use crate::error::{Error, Result};
use crate::SeededRng;

/// Standard normal vector with every coordinate conditioned on
/// `[-2 tau, 2 tau]`. Out-of-range coordinates are redrawn individually.
pub fn truncated_normal_sample(tau: f64, dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    assert!(tau > 0.0, "truncation must be positive, got {tau}");
    let bound = 2.0 * tau;
    (0..dim)
        .map(|_| loop {
            let z = standard_normal(rng);
            if z.abs() <= bound {
                break z;
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Identity,
    Tanh,
}

impl Nonlinearity {
    fn apply(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AffineMap {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// `x = f(W_y z + b_y)` with `z` a truncated standard normal latent.
#[derive(Debug, Clone)]
pub struct TruncatedLatentGenerator {
    latent_dim: usize,
    maps: Vec<AffineMap>,
    nonlinearity: Nonlinearity,
    truncation: f64,
}

impl TruncatedLatentGenerator {
    pub fn new(
        latent_dim: usize,
        maps: Vec<AffineMap>,
        nonlinearity: Nonlinearity,
        truncation: f64,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidGenerator("need a map for at least 2 classes".into()));
        }
        if !(truncation > 0.0) {
            return Err(Error::InvalidGenerator(format!(
                "truncation must be positive, got {truncation}"
            )));
        }
        let d = maps[0].bias.len();
        if latent_dim == 0 || d == 0 {
            return Err(Error::InvalidGenerator("empty latent or output dimension".into()));
        }
        for (c, m) in maps.iter().enumerate() {
            if m.weight.shape() != (d, latent_dim) || m.bias.len() != d {
                return Err(Error::InvalidGenerator(format!(
                    "map {c} must have weight ({d}, {latent_dim}) and bias {d}"
                )));
            }
            if m.weight.iter().chain(m.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidGenerator(format!("map {c} has non-finite entries")));
            }
        }
        Ok(Self {
            latent_dim,
            maps,
            nonlinearity,
            truncation,
        })
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn with_truncation(&self, truncation: f64) -> Result<Self> {
        Self::new(self.latent_dim, self.maps.clone(), self.nonlinearity, truncation)
    }
}

impl ConditionalGenerator for TruncatedLatentGenerator {
    fn kind(&self) -> &'static str {
        "truncated_latent"
    }

    fn num_classes(&self) -> usize {
        self.maps.len()
    }

    fn dim(&self) -> usize {
        self.maps[0].bias.len()
    }

    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        check_class(class, self.num_classes())?;
        let z = DVector::from_vec(truncated_normal_sample(self.truncation, self.latent_dim, rng));
        let map = &self.maps[class];
        let pre = &map.weight * z + &map.bias;
        Ok(pre.iter().map(|&v| self.nonlinearity.apply(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn components_respect_bound() {
        let z = truncated_normal_sample(0.2, 10_000, &mut seeded_rng(0));
        assert!(z.iter().all(|v| v.abs() <= 0.4));
    }

    #[test]
    fn huge_tau_is_standard_normal() {
        let z = truncated_normal_sample(1e6, 10_000, &mut seeded_rng(1));
        let var = variance(&z);
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let z = truncated_normal_sample(f64::INFINITY, 10_000, &mut seeded_rng(1));
        assert!((variance(&z) - 1.0).abs() < 0.05);
    }

    // Variance of N(0,1) truncated to [-a, a] is 1 - 2 a phi(a) / (2 Phi(a) - 1);
    // the oracle integrates the density numerically.
    fn truncated_variance_quadrature(a: f64) -> f64 {
        let steps = 20_000;
        let h = 2.0 * a / steps as f64;
        let (mut mass, mut second) = (0.0, 0.0);
        for i in 0..=steps {
            let x = -a + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let p = (-0.5 * x * x).exp();
            mass += w * p;
            second += w * p * x * x;
        }
        second / mass
    }

    #[test]
    fn variance_grows_with_tau() {
        let v05 = variance(&truncated_normal_sample(0.5, 10_000, &mut seeded_rng(2)));
        let v10 = variance(&truncated_normal_sample(1.0, 10_000, &mut seeded_rng(3)));
        assert!(v05 < v10, "{v05} vs {v10}");
        // quadrature: 0.2911 at tau=0.5 and 0.7737 at tau=1.0
        for (v, tau) in [(v05, 0.5), (v10, 1.0)] {
            let exact = truncated_variance_quadrature(2.0 * tau);
            assert!((v - exact).abs() < 0.03, "tau {tau}: {v} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_construction() {
        let map = AffineMap {
            weight: DMatrix::identity(2, 2),
            bias: DVector::zeros(2),
        };
        assert!(TruncatedLatentGenerator::new(2, vec![map.clone(), map.clone()], Nonlinearity::Identity, 0.0).is_err());
        assert!(TruncatedLatentGenerator::new(3, vec![map.clone(), map.clone()], Nonlinearity::Identity, 1.0).is_err());
        let g = TruncatedLatentGenerator::new(2, vec![map.clone(), map], Nonlinearity::Tanh, 1.0).unwrap();
        assert!(g.log_likelihood(&[0.0, 0.0], 0).is_err());
        let x = g.sample(0, &mut seeded_rng(0)).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1.0));
    }
}
