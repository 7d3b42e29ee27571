use ndarray::{ArrayD, ArrayViewMutD, Zip};
use serde::{Deserialize, Serialize};

use super::Gradients;
use crate::{Error, Result};

/// `η_t = η_min + ½(η_0 − η_min)(1 + cos(π t / T))`; `T = 0` yields `η_0`.
pub fn cosine_lr(step: u64, total_steps: u64, lr0: f64, lr_min: f64) -> f64 {
    if total_steps == 0 {
        return lr0;
    }
    let t = step.min(total_steps) as f64 / total_steps as f64;
    lr_min + 0.5 * (lr0 - lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr0: f64,
    pub lr_min: f64,
    pub total_steps: u64,
}

/// Adam with bias correction, learning rate taken from the cosine schedule
/// at the current step.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    pub first_moment: Vec<ArrayD<f64>>,
    pub second_moment: Vec<ArrayD<f64>>,
    pub step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, shapes: &[Vec<usize>]) -> Self {
        let zeros = || shapes.iter().map(|s| ArrayD::zeros(s.clone())).collect::<Vec<_>>();
        Self { config, first_moment: zeros(), second_moment: zeros(), step: 0 }
    }

    pub fn current_lr(&self) -> f64 {
        cosine_lr(self.step, self.config.total_steps, self.config.lr0, self.config.lr_min)
    }

    /// Applies one update in place; returns the learning rate that was used.
    pub fn apply(&mut self, params: Vec<ArrayViewMutD<'_, f64>>, grads: &Gradients) -> Result<f64> {
        if params.len() != grads.0.len() || params.len() != self.first_moment.len() {
            return Err(Error::Dimension(format!(
                "{} parameter tensors, {} gradients, {} moment buffers",
                params.len(),
                grads.0.len(),
                self.first_moment.len()
            )));
        }
        let lr = self.current_lr();
        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon, .. } = self.config;
        let bias1 = 1.0 - beta1.powf(self.step as f64);
        let bias2 = 1.0 - beta2.powf(self.step as f64);

        for (((mut p, g), m), v) in params
            .into_iter()
            .zip(&grads.0)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            if p.shape() != g.shape() {
                return Err(Error::Dimension(format!(
                    "parameter shape {:?} vs gradient shape {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
            Zip::from(&mut p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
            });
        }
        Ok(lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, IxDyn};

    #[test]
    fn schedule_points() {
        assert_eq!(cosine_lr(0, 100, 1e-3, 0.0), 1e-3);
        assert!(cosine_lr(100, 100, 1e-3, 0.0).abs() < 1e-18);
        assert!((cosine_lr(50, 100, 1e-3, 0.0) - 5e-4).abs() < 1e-15);
        assert_eq!(cosine_lr(7, 0, 1e-3, 0.0), 1e-3);
        assert!((cosine_lr(100, 100, 1e-3, 1e-5) - 1e-5).abs() < 1e-18);
    }

    fn config() -> AdamConfig {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-7, lr0: 1e-3, lr_min: 0.0, total_steps: 10 }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = arr1(&[0.5]).into_dyn();
        let mut adam = Adam::new(config(), &[vec![1]]);
        let lr = adam.apply(vec![p.view_mut()], &Gradients(vec![arr1(&[1.0]).into_dyn()])).unwrap();
        assert_eq!(lr, 1e-3);
        assert!((p[IxDyn(&[0])] - (0.5 - 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = arr1(&[0.5, -2.0]).into_dyn();
        let before = p.clone();
        let mut adam = Adam::new(config(), &[vec![2]]);
        for _ in 0..3 {
            adam.apply(vec![p.view_mut()], &Gradients(vec![ArrayD::zeros(IxDyn(&[2]))])).unwrap();
        }
        assert_eq!(p, before);
    }
}
