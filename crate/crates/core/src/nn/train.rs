use std::io::Write;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::Model;
use super::optim::{Adam, AdamConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Batch losses averaged with batch sizes as weights.
    pub mean_loss: f64,
    /// Learning rate used by the epoch's last step.
    pub lr: f64,
}

/// Mini-batch Adam training that can be resumed across calls with different
/// sample weights while keeping a single cosine schedule.
#[derive(Debug, Clone)]
pub struct Trainer {
    optimizer: Adam,
    epochs_done: usize,
    total_epochs: usize,
}

impl Trainer {
    /// Plans `total_epochs` epochs over `n_samples` samples; the cosine schedule
    /// spans all of their steps.
    pub fn new(model: &Model, n_samples: usize, total_epochs: usize) -> Self {
        let cfg = model.config();
        let steps_per_epoch = n_samples.div_ceil(cfg.batch_size) as u64;
        let shapes: Vec<Vec<usize>> = model.parameters().iter().map(|p| p.shape().to_vec()).collect();
        let optimizer = Adam::new(
            AdamConfig {
                beta1: cfg.adam_beta1,
                beta2: cfg.adam_beta2,
                epsilon: cfg.adam_epsilon,
                lr0: cfg.learning_rate,
                lr_min: cfg.min_learning_rate,
                total_steps: steps_per_epoch * total_epochs as u64,
            },
            &shapes,
        );
        Self { optimizer, epochs_done: 0, total_epochs }
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    /// Runs `epochs` passes over seeded shuffles of the data.
    pub fn run_epochs<R: Rng + ?Sized>(
        &mut self,
        model: &mut Model,
        x: ArrayView2<f64>,
        labels: &[usize],
        weights: &[f64],
        epochs: usize,
        rng: &mut R,
    ) -> Result<Vec<EpochLoss>> {
        let n = x.nrows();
        if labels.len() != n || weights.len() != n {
            return Err(Error::Dimension(format!(
                "{n} rows, {} labels, {} weights",
                labels.len(),
                weights.len()
            )));
        }
        if self.epochs_done + epochs > self.total_epochs {
            return Err(Error::Config(format!(
                "{} more epochs would exceed the planned {}",
                epochs, self.total_epochs
            )));
        }
        let batch_size = model.config().batch_size;
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(rng);
            let mut loss_sum = 0.0;
            let mut lr = self.optimizer.current_lr();
            for idx in order.chunks(batch_size) {
                let xb = x.select(Axis(0), idx);
                let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                let wb: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
                let tape = model.forward_train(xb.view(), rng)?;
                let (loss, grads) = model.backward(&tape, &yb, &wb)?;
                lr = self.optimizer.apply(model.parameters_mut(), &grads)?;
                loss_sum += loss * idx.len() as f64;
            }
            self.epochs_done += 1;
            trace.push(EpochLoss { epoch: self.epochs_done, mean_loss: loss_sum / n.max(1) as f64, lr });
        }
        Ok(trace)
    }
}

/// Trains for `model.config().epochs` epochs with the given per-sample weights.
pub fn train<R: Rng + ?Sized>(
    model: &mut Model,
    x: ArrayView2<f64>,
    labels: &[usize],
    weights: &[f64],
    rng: &mut R,
) -> Result<Vec<EpochLoss>> {
    let epochs = model.config().epochs;
    let mut trainer = Trainer::new(model, x.nrows(), epochs);
    trainer.run_epochs(model, x, labels, weights, epochs, rng)
}

pub fn write_loss_trace<W: Write>(writer: W, trace: &[EpochLoss]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in trace {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
