//! Label-smoothed, sample-weighted cross-entropy.
//!
//! Targets are `(1 - s)·onehot + s/C`. Each sample contributes
//! `ℓ_i = -Σ_c y'_c ln(p_c + ε)` and the batch loss is `Σ w_i ℓ_i / Σ w_i`, so
//! multiplying every weight by the same constant changes nothing.

use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

pub const LOG_EPSILON: f64 = 1e-12;

pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

pub fn smoothed_targets(labels: &[usize], classes: usize, smoothing: f64) -> Array2<f64> {
    let mut t = Array2::from_elem((labels.len(), classes), smoothing / classes as f64);
    for (i, &y) in labels.iter().enumerate() {
        t[[i, y]] += 1.0 - smoothing;
    }
    t
}

fn check(probs: ArrayView2<f64>, labels: &[usize], weights: &[f64]) -> Result<f64> {
    let n = probs.nrows();
    if n == 0 {
        return Err(Error::Dimension("empty batch".into()));
    }
    if labels.len() != n || weights.len() != n {
        return Err(Error::Dimension(format!(
            "batch of {n} rows with {} labels and {} weights",
            labels.len(),
            weights.len()
        )));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= probs.ncols()) {
        return Err(Error::Dimension(format!("label {y} outside {} classes", probs.ncols())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Config("sample weights must be positive and finite".into()));
    }
    Ok(weights.iter().sum())
}

/// Per-sample smoothed cross-entropy `ℓ_i`.
pub fn per_sample_loss(probs: ArrayView2<f64>, labels: &[usize], smoothing: f64) -> Vec<f64> {
    let targets = smoothed_targets(labels, probs.ncols(), smoothing);
    probs
        .rows()
        .into_iter()
        .zip(targets.rows())
        .map(|(p, t)| -p.iter().zip(t).map(|(p, t)| t * (p + LOG_EPSILON).ln()).sum::<f64>())
        .collect()
}

pub fn smoothed_weighted_loss(probs: ArrayView2<f64>, labels: &[usize], weights: &[f64], smoothing: f64) -> Result<f64> {
    let total = check(probs, labels, weights)?;
    let losses = per_sample_loss(probs, labels, smoothing);
    Ok(losses.iter().zip(weights).map(|(l, w)| w * l).sum::<f64>() / total)
}

/// Gradient of the weighted loss with respect to the softmax logits, exact
/// including the log guard: `(w_i/W)·(p_k Σ_c q_c − q_k)` with
/// `q_c = y'_c p_c / (p_c + ε)`.
pub fn loss_grad_logits(probs: ArrayView2<f64>, labels: &[usize], weights: &[f64], smoothing: f64) -> Result<Array2<f64>> {
    let total = check(probs, labels, weights)?;
    let targets = smoothed_targets(labels, probs.ncols(), smoothing);
    let mut grad = Array2::zeros(probs.raw_dim());
    for (i, mut g) in grad.axis_iter_mut(Axis(0)).enumerate() {
        let p = probs.row(i);
        let q: Vec<f64> = p
            .iter()
            .zip(targets.row(i))
            .map(|(p, t)| t * p / (p + LOG_EPSILON))
            .collect();
        let q_sum: f64 = q.iter().sum();
        let scale = weights[i] / total;
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = scale * (p[k] * q_sum - q[k]);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_binary_loss_is_ln2() {
        let probs = array![[0.5, 0.5]];
        let l = smoothed_weighted_loss(probs.view(), &[1], &[1.0], 0.1).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-11);
    }

    #[test]
    fn weighted_mean_definition() {
        let probs = array![[0.9, 0.1], [0.3, 0.7]];
        let per = per_sample_loss(probs.view(), &[0, 0], 0.1);
        let l = smoothed_weighted_loss(probs.view(), &[0, 0], &[3.0, 1.0], 0.1).unwrap();
        assert!((l - (3.0 * per[0] + per[1]) / 4.0).abs() < 1e-15);
        let equal = smoothed_weighted_loss(probs.view(), &[0, 0], &[0.7, 0.7], 0.1).unwrap();
        assert!((equal - (per[0] + per[1]) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_weights() {
        let probs = array![[0.5, 0.5], [0.5, 0.5]];
        assert!(smoothed_weighted_loss(probs.view(), &[0, 1], &[2.0, 0.0], 0.1).is_err());
        assert!(smoothed_weighted_loss(probs.view(), &[0, 1], &[2.0, -1.0], 0.1).is_err());
    }

    #[test]
    fn softmax_rows_normalize() {
        let p = softmax_rows(array![[1000.0, 1000.0, 1000.0], [-3.0, 0.0, 2.0]].view());
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert!((p[[0, 0]] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn logit_gradient_close_to_p_minus_target() {
        let probs = array![[0.2, 0.8]];
        let g = loss_grad_logits(probs.view(), &[1], &[1.0], 0.1).unwrap();
        assert!((g[[0, 0]] - (0.2 - 0.05)).abs() < 1e-10);
        assert!((g[[0, 1]] - (0.8 - 0.95)).abs() < 1e-10);
    }
}
