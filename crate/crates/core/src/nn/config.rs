use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Dense stem, bottleneck residual blocks, softmax head.
    ResidualMlp,
    /// Plain feed-forward network: Dense→ReLU hidden layers, softmax head.
    Ann,
    /// Single sigmoid unit over the input (binary only).
    Logreg,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual-mlp" | "mlp" => Ok(ModelKind::ResidualMlp),
            "ann" => Ok(ModelKind::Ann),
            "logreg" | "lr" => Ok(ModelKind::Logreg),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Architecture and training hyperparameters. Defaults reproduce the
/// reference residual classifier: 1024-wide stem, two 256-unit bottleneck
/// blocks, dropout 0.3/0.2, label smoothing 0.1, Adam with cosine annealing
/// from 1e-3, batch 32, 25 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
    pub stem_width: usize,
    pub bottleneck_width: usize,
    pub residual_blocks: usize,
    /// Hidden widths for [`ModelKind::Ann`].
    pub hidden: Vec<usize>,
    pub stem_dropout: f64,
    pub block_dropout: f64,
    pub hidden_dropout: f64,
    pub label_smoothing: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::ResidualMlp,
            input_dim: 3328,
            num_classes: 2,
            stem_width: 1024,
            bottleneck_width: 256,
            residual_blocks: 2,
            hidden: vec![256, 128],
            stem_dropout: 0.3,
            block_dropout: 0.2,
            hidden_dropout: 0.0,
            label_smoothing: 0.1,
            batch_size: 32,
            epochs: 25,
            learning_rate: 1e-3,
            min_learning_rate: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-7,
            bn_momentum: 0.99,
            bn_epsilon: 1e-3,
        }
    }
}

impl ModelConfig {
    pub fn residual(input_dim: usize, num_classes: usize) -> Self {
        Self { input_dim, num_classes, ..Self::default() }
    }

    pub fn ann(input_dim: usize, num_classes: usize, hidden: Vec<usize>) -> Self {
        Self { kind: ModelKind::Ann, input_dim, num_classes, hidden, ..Self::default() }
    }

    pub fn logreg(input_dim: usize) -> Self {
        Self { kind: ModelKind::Logreg, input_dim, num_classes: 2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2".into());
        }
        if self.kind == ModelKind::Logreg && self.num_classes != 2 {
            return bad("logistic regression is binary only".into());
        }
        if self.kind == ModelKind::ResidualMlp && (self.stem_width == 0 || self.bottleneck_width == 0) {
            return bad("residual widths must be positive".into());
        }
        if self.kind == ModelKind::Ann && self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        for (name, rate) in [
            ("stem_dropout", self.stem_dropout),
            ("block_dropout", self.block_dropout),
            ("hidden_dropout", self.hidden_dropout),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad("label_smoothing must lie in [0, 1)".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0) || self.min_learning_rate < 0.0 {
            return bad("learning rates must be positive".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || !(self.bn_epsilon > 0.0) {
            return bad("invalid batch-norm constants".into());
        }
        Ok(())
    }
}
