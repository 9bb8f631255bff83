//! Monte-Carlo oracles for generators, moments and the evaluation procedures.

use std::sync::Arc;

use genmetric_core::classifier::{Architecture, ClassifierConfig};
use genmetric_core::dataset::LabeledDataset;
use genmetric_core::generators::{
    bayes_classify, AffineMap, CopyMode, Covariance, GaussianClassConditional, MemorizingGenerator, Nonlinearity,
    NoiseMixtureGenerator, TruncatedLatentGenerator, UniformBoxGenerator,
};
use genmetric_core::metrics::{cas, gan_test, kid, moment_stats, nas, real_baseline, KidParams};
use genmetric_core::{seeded_rng, ConditionalGenerator};
use nalgebra::{DMatrix, DVector};

fn draw(gen: &dyn ConditionalGenerator, class: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| gen.sample(class, &mut rng).unwrap()).collect()
}

fn dataset(gen: &dyn ConditionalGenerator, n: usize, seed: u64) -> LabeledDataset {
    let k = gen.num_classes();
    let mut rng = seeded_rng(seed);
    let labels: Vec<u32> = (0..n).map(|i| (i % k) as u32).collect();
    let rows: Vec<Vec<f64>> = labels.iter().map(|&c| gen.sample(c as usize, &mut rng).unwrap()).collect();
    LabeledDataset::from_rows("d", &rows, labels, k).unwrap()
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn three_class() -> GaussianClassConditional {
    GaussianClassConditional::isotropic(vec![vec![0.0, 0.0], vec![2.5, 0.0], vec![1.25, 2.2]], 1.0).unwrap()
}

fn quick_config() -> ClassifierConfig {
    ClassifierConfig {
        epochs: 12,
        decay_epochs: vec![8],
        ..ClassifierConfig::default()
    }
}

#[test]
fn noise_mixture_with_p_one_matches_base_by_ks_test() {
    let base = GaussianClassConditional::isotropic(vec![vec![0.0], vec![2.0]], 1.0).unwrap();
    let mixture = NoiseMixtureGenerator::new(Box::new(base.clone()), 1.0, vec![40.0], vec![50.0]).unwrap();
    let n = 10_000;
    let a: Vec<f64> = draw(&mixture, 1, n, 1).into_iter().map(|x| x[0]).collect();
    let b: Vec<f64> = draw(&base, 1, n, 2).into_iter().map(|x| x[0]).collect();
    let critical = (-(0.01f64 / 2.0).ln() / 2.0).sqrt() * ((2 * n) as f64 / (n * n) as f64).sqrt();
    let d = ks_statistic(a, b);
    assert!(d < critical, "KS {d} >= {critical}");
}

#[test]
fn truncation_shrinks_empirical_variance() {
    let map = |s: f64| AffineMap {
        weight: DMatrix::from_element(1, 1, s),
        bias: DVector::zeros(1),
    };
    let gen = TruncatedLatentGenerator::new(1, vec![map(1.0), map(2.0)], Nonlinearity::Identity, 1.0).unwrap();
    let variance = |g: &TruncatedLatentGenerator| {
        let xs: Vec<f64> = draw(g, 0, 10_000, 3).into_iter().map(|x| x[0]).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let half = variance(&gen.with_truncation(0.5).unwrap());
    let one = variance(&gen);
    assert!(half < one, "{half} >= {one}");
}

#[test]
fn well_separated_classes_have_near_perfect_bayes_accuracy() {
    let gen = GaussianClassConditional::isotropic(vec![vec![0.0, 0.0], vec![10.0, 0.0]], 1.0).unwrap();
    let ds = dataset(&gen, 10_000, 4);
    let acc = bayes_classify(&gen, &ds, gen.priors()).unwrap();
    assert!(acc.accuracy >= 0.999, "{}", acc.accuracy);
}

#[test]
fn full_covariance_sample_moments_converge() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
    let gen = GaussianClassConditional::new(
        vec![vec![0.0, 0.0], vec![1.0, 1.0]],
        Covariance::Full(vec![cov.clone(), cov.clone()]),
        None,
    )
    .unwrap();
    let rows = draw(&gen, 0, 20_000, 5);
    let m = DMatrix::from_row_iterator(rows.len(), 2, rows.iter().flatten().copied());
    let stats = moment_stats(&m).unwrap();
    for (est, exact) in stats.cov.iter().zip(cov.iter()) {
        assert!((est - exact).abs() <= 0.05 * 4.0, "{est} vs {exact}");
    }
    assert!((stats.cov[(1, 1)] / 4.0 - 1.0).abs() < 0.05);
    assert!((stats.cov[(0, 0)] - 1.0).abs() < 0.05);
}

#[test]
fn kid_separates_shifted_gaussians() {
    let mut rng = seeded_rng(6);
    let mut normal = |shift: f64| {
        DMatrix::from_fn(1000, 2, |_, _| shift + rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal))
    };
    let a = normal(0.0);
    let b = normal(5.0);
    let value = kid(&a, &b, &KidParams::default()).unwrap();
    assert!(value > 0.5, "{value}");
}

#[test]
fn well_specified_generator_tracks_the_baseline() {
    let gen = three_class();
    let train = dataset(&gen, 3000, 7);
    let test = dataset(&gen, 6000, 8);
    let cfg = quick_config();
    let baseline = real_baseline(&train, &test, &cfg, 1).unwrap();
    let outcome = cas(&gen, &train, &test, &cfg, 1, 9).unwrap();
    let bayes = bayes_classify(&gen, &test, gen.priors()).unwrap().accuracy;
    assert!((outcome.run.top1.accuracy - baseline.top1.accuracy).abs() <= 0.02);
    assert!((baseline.top1.accuracy - bayes).abs() <= 0.02);
    assert_eq!(outcome.synthetic.labels(), train.labels());
}

#[test]
fn separable_task_has_near_perfect_baseline() {
    let gen = GaussianClassConditional::isotropic(vec![vec![0.0, 0.0], vec![8.0, 0.0], vec![0.0, 8.0]], 1.0).unwrap();
    let train = dataset(&gen, 900, 10);
    let test = dataset(&gen, 3000, 11);
    let cfg = ClassifierConfig {
        architecture: Architecture::Linear,
        ..quick_config()
    };
    let run = real_baseline(&train, &test, &cfg, 1).unwrap();
    assert!(run.top1.accuracy >= 0.99, "{}", run.top1.accuracy);
    assert_eq!(run.topk.accuracy, run.top1.accuracy);
}

#[test]
fn nas_with_memorizer_stays_at_baseline() {
    let gen = three_class();
    let train = Arc::new(dataset(&gen, 1500, 12));
    let test = dataset(&gen, 3000, 13);
    let cfg = quick_config();
    let memorizer = MemorizingGenerator::new(Arc::clone(&train), CopyMode::Resample).unwrap();
    let baseline = real_baseline(&train, &test, &cfg, 1).unwrap();
    let points = nas(&train, &memorizer, &[0.5, 1.0], &test, &cfg, 1, 14).unwrap();
    for p in &points {
        assert!((p.top1 - baseline.top1.accuracy).abs() <= 0.01, "{p:?} vs {}", baseline.top1.accuracy);
    }
    assert_eq!(points[0].train_size, 1500 + 750);
    assert_eq!(points[1].train_size, 3000);
}

#[test]
fn gan_test_on_label_free_noise_is_chance() {
    let gen = three_class();
    let train = dataset(&gen, 1500, 15);
    let noise = UniformBoxGenerator::new(3, vec![-3.0, -3.0], vec![5.5, 5.0]).unwrap();
    let result = gan_test(&train, &noise, 3000, &quick_config(), 1, 16).unwrap();
    assert!((result.top1 - 1.0 / 3.0).abs() <= 0.05, "{}", result.top1);
}

#[test]
fn gan_test_on_true_distribution_matches_test_accuracy() {
    let gen = three_class();
    let train = dataset(&gen, 3000, 17);
    let test = dataset(&gen, 3000, 18);
    let cfg = quick_config();
    let baseline = real_baseline(&train, &test, &cfg, 1).unwrap();
    let result = gan_test(&train, &gen, 3000, &cfg, 1, 19).unwrap();
    assert!((result.top1 - baseline.top1.accuracy).abs() <= 0.03);
}
