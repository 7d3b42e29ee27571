//! A small dense-network engine with hand-written gradients: the residual
//! MLP classifier, a plain feed-forward baseline, and logistic regression,
//! all trained on sample-weighted, label-smoothed cross-entropy with Adam and
//! cosine annealing.

mod checkpoint;
mod config;
mod layers;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{ModelConfig, ModelKind};
pub use layers::{BatchNorm, Dense};
pub use loss::{
    loss_grad_logits, per_sample_loss, smoothed_targets, smoothed_weighted_loss, softmax_rows, LOG_EPSILON,
};
pub use model::{argmax_rows, predict, Gradients, Mode, Model, Network, ResidualBlock, Tape};
pub use optim::{cosine_lr, Adam, AdamConfig};
pub use train::{train, write_loss_trace, EpochLoss, Trainer};
