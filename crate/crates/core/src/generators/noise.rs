use rand::Rng;

use super::{check_class, check_dim, log_sum_exp, ConditionalGenerator};
use crate::error::{Error, Result};
use crate::{seeded_rng, SeededRng};

/// Base density above which a point is considered inside the base support.
pub const DISJOINT_DENSITY: f64 = 1e-12;

const PROBE_POINTS: usize = 512;
const PROBE_SEED: u64 = 0x6e6f_6973_6562_6f78;

#[derive(Debug, Clone)]
struct NoiseBox {
    low: Vec<f64>,
    high: Vec<f64>,
    log_volume: f64,
}

impl NoiseBox {
    fn new(low: Vec<f64>, high: Vec<f64>, dim: usize) -> Result<Self> {
        if low.len() != dim || high.len() != dim {
            return Err(Error::InvalidGenerator(format!(
                "noise box corners must have dimension {dim}"
            )));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l.is_finite() && h.is_finite() && h > l)) {
            return Err(Error::InvalidGenerator(
                "noise box must satisfy high > low componentwise".into(),
            ));
        }
        let log_volume = low.iter().zip(&high).map(|(l, h)| (h - l).ln()).sum();
        Ok(Self {
            low,
            high,
            log_volume,
        })
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(v, (l, h))| v >= l && v <= h)
    }

    fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
            .collect()
    }
}

/// With probability `mix_prob` a draw from `base`, otherwise a uniform draw
/// from a box that the base distribution does not reach.
#[derive(Debug)]
pub struct NoiseMixtureGenerator {
    base: Box<dyn ConditionalGenerator>,
    mix_prob: f64,
    noise: NoiseBox,
}

impl NoiseMixtureGenerator {
    pub fn new(
        base: Box<dyn ConditionalGenerator>,
        mix_prob: f64,
        noise_low: Vec<f64>,
        noise_high: Vec<f64>,
    ) -> Result<Self> {
        if !(mix_prob > 0.0 && mix_prob <= 1.0) {
            return Err(Error::InvalidGenerator(format!(
                "mix_prob must lie in (0, 1], got {mix_prob}"
            )));
        }
        let noise = NoiseBox::new(noise_low, noise_high, base.dim())?;
        check_disjoint(base.as_ref(), &noise)?;
        Ok(Self {
            base,
            mix_prob,
            noise,
        })
    }

    pub fn base(&self) -> &dyn ConditionalGenerator {
        self.base.as_ref()
    }

    pub fn mix_prob(&self) -> f64 {
        self.mix_prob
    }

    pub fn in_noise_box(&self, x: &[f64]) -> bool {
        self.noise.contains(x)
    }
}

fn check_disjoint(base: &dyn ConditionalGenerator, noise: &NoiseBox) -> Result<()> {
    let mut rng = seeded_rng(PROBE_SEED);
    if base.has_exact_likelihood() {
        let d = noise.low.len();
        let corners = (0..(1usize << d.min(10))).map(|mask| {
            (0..d)
                .map(|j| if j < 10 && (mask >> j) & 1 == 1 { noise.high[j] } else { noise.low[j] })
                .collect::<Vec<_>>()
        });
        let interior: Vec<Vec<f64>> = (0..PROBE_POINTS).map(|_| noise.sample(&mut rng)).collect();
        for x in corners.chain(interior) {
            for class in 0..base.num_classes() {
                let density = base.log_likelihood(&x, class)?.exp();
                if density >= DISJOINT_DENSITY {
                    return Err(Error::InvalidGenerator(format!(
                        "noise box overlaps class {class} support (density {density:e} at {x:?})"
                    )));
                }
            }
        }
    } else {
        for class in 0..base.num_classes() {
            for _ in 0..PROBE_POINTS {
                if noise.contains(&base.sample(class, &mut rng)?) {
                    return Err(Error::InvalidGenerator(format!(
                        "noise box overlaps samples of class {class}"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl ConditionalGenerator for NoiseMixtureGenerator {
    fn kind(&self) -> &'static str {
        "noise_mixture"
    }

    fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        check_class(class, self.num_classes())?;
        if rng.random::<f64>() < self.mix_prob {
            self.base.sample(class, rng)
        } else {
            Ok(self.noise.sample(rng))
        }
    }

    /// `ln(p * base(x | y) + (1 - p) * 1[x in box] / volume)`.
    fn log_likelihood(&self, x: &[f64], class: usize) -> Result<f64> {
        check_class(class, self.num_classes())?;
        check_dim(x, self.dim())?;
        let base = self.mix_prob.ln() + self.base.log_likelihood(x, class)?;
        let noise = if self.noise.contains(x) && self.mix_prob < 1.0 {
            (1.0 - self.mix_prob).ln() - self.noise.log_volume
        } else {
            f64::NEG_INFINITY
        };
        Ok(log_sum_exp(&[base, noise]))
    }

    fn has_exact_likelihood(&self) -> bool {
        self.base.has_exact_likelihood()
    }
}

/// Class-independent uniform noise over a box; every label gets the same
/// distribution. Useful as a chance-level control.
#[derive(Debug, Clone)]
pub struct UniformBoxGenerator {
    num_classes: usize,
    noise: NoiseBox,
}

impl UniformBoxGenerator {
    pub fn new(num_classes: usize, low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidGenerator("need at least 2 classes".into()));
        }
        let dim = low.len();
        if dim == 0 {
            return Err(Error::InvalidGenerator("empty noise box".into()));
        }
        Ok(Self {
            num_classes,
            noise: NoiseBox::new(low, high, dim)?,
        })
    }
}

impl ConditionalGenerator for UniformBoxGenerator {
    fn kind(&self) -> &'static str {
        "uniform_box"
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dim(&self) -> usize {
        self.noise.low.len()
    }

    fn sample(&self, class: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        check_class(class, self.num_classes)?;
        Ok(self.noise.sample(rng))
    }

    fn log_likelihood(&self, x: &[f64], class: usize) -> Result<f64> {
        check_class(class, self.num_classes)?;
        check_dim(x, self.dim())?;
        Ok(if self.noise.contains(x) {
            -self.noise.log_volume
        } else {
            f64::NEG_INFINITY
        })
    }

    fn has_exact_likelihood(&self) -> bool {
        true
    }
}
