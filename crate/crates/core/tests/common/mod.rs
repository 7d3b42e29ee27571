#![allow(dead_code)]

use ndarray::Array2;
use qweight::nn::{Model, ModelConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || rand_distr::Distribution::sample(&normal, rng))
}

/// A narrow residual network with dropout off, for gradient checks.
pub fn small_residual(rng: &mut impl Rng) -> ModelConfig {
    ModelConfig {
        input_dim: rng.random_range(2..=8),
        stem_width: rng.random_range(6..=12),
        bottleneck_width: rng.random_range(3..=6),
        residual_blocks: rng.random_range(1..=2),
        stem_dropout: 0.0,
        block_dropout: 0.0,
        ..ModelConfig::default()
    }
}

pub fn batch_loss(model: &mut Model, x: &Array2<f64>, y: &[usize], w: &[f64]) -> f64 {
    let tape = model.forward_train(x.view(), &mut rng(0)).unwrap();
    model.backward(&tape, y, w).unwrap().0
}

/// Largest relative error between analytic gradients and central differences
/// over every trainable parameter. The denominator is floored at 1e-6 so that
/// parameters with an exactly zero gradient (biases feeding batch norm) are
/// judged on absolute error.
pub fn gradient_check(model: &mut Model, x: &Array2<f64>, y: &[usize], w: &[f64], h: f64) -> f64 {
    let tape = model.forward_train(x.view(), &mut rng(0)).unwrap();
    let (_, grads) = model.backward(&tape, y, w).unwrap();
    let mut worst: f64 = 0.0;
    for (t, g) in grads.0.iter().enumerate() {
        for k in 0..g.len() {
            let original = *model.parameters_mut()[t].iter_mut().nth(k).unwrap();
            *model.parameters_mut()[t].iter_mut().nth(k).unwrap() = original + h;
            let up = batch_loss(model, x, y, w);
            *model.parameters_mut()[t].iter_mut().nth(k).unwrap() = original - h;
            let down = batch_loss(model, x, y, w);
            *model.parameters_mut()[t].iter_mut().nth(k).unwrap() = original;
            let numeric = (up - down) / (2.0 * h);
            let analytic = *g.iter().nth(k).unwrap();
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

/// AUC by counting every positive/negative pair, ties as one half.
pub fn brute_force_auc(scores: &[f64], labels: &[usize]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
