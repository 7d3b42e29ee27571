//! Tabular Q-learning agent that assigns per-sample loss weights.
//!
//! Every training sample is its own state with one Q-table row. Actions pick
//! a weight multiplier from a small discrete set. After the classifier is
//! trained, each sample earns reward 1 if it is predicted correctly and 0
//! otherwise, and the executed action's value is updated with a one-step
//! bootstrap on the same row.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_ACTIONS: [f64; 5] = [0.25, 0.5, 1.0, 1.25, 1.5];

/// Which split's predictions drive the Q-table update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateSplit {
    /// The fold's training samples (no validation data reaches the agent).
    #[default]
    Train,
    /// The fold's validation samples, given their own Q rows.
    Validation,
}

impl std::str::FromStr for UpdateSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(UpdateSplit::Train),
            "validation" | "val" => Ok(UpdateSplit::Validation),
            other => Err(Error::Config(format!("unknown update split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub actions: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub update_split: UpdateSplit,
    /// Assign→train→update cycles per fold; the epoch budget is split evenly.
    pub rounds: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            actions: DEFAULT_ACTIONS.to_vec(),
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 1.0,
            epsilon_decay: 0.99,
            update_split: UpdateSplit::Train,
            rounds: 1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.actions.is_empty() || self.actions.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("actions must be positive weights");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad("epsilon_decay must lie in (0, 1]");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        Ok(())
    }
}

/// Action values, last executed action per row, and the current exploration
/// rate. Rows start at zero with action 0 recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub q: Array2<f64>,
    pub last_action: Vec<usize>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    config: AgentConfig,
    table: QTable,
}

fn argmax_lowest(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// 1 where the prediction matches the label, else 0.
pub fn compute_rewards(predictions: &[usize], labels: &[usize]) -> Result<Vec<u8>> {
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    Ok(predictions.iter().zip(labels).map(|(p, y)| u8::from(p == y)).collect())
}

impl Agent {
    pub fn new(rows: usize, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        if rows == 0 {
            return Err(Error::Config("agent needs at least one sample".into()));
        }
        let table = QTable {
            q: Array2::zeros((rows, config.actions.len())),
            last_action: vec![0; rows],
            epsilon: config.epsilon,
        };
        Ok(Self { config, table })
    }

    /// Rebuilds an agent around an existing table, e.g. one restored from a
    /// dump.
    pub fn from_table(config: AgentConfig, table: QTable) -> Result<Self> {
        config.validate()?;
        let rows = table.q.nrows();
        if rows == 0 || table.q.ncols() != config.actions.len() || table.last_action.len() != rows {
            return Err(Error::Dimension("Q-table shape does not match the configuration".into()));
        }
        if table.last_action.iter().any(|&a| a >= config.actions.len()) {
            return Err(Error::Dimension("last action outside the action set".into()));
        }
        Ok(Self { config, table })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn rows(&self) -> usize {
        self.table.q.nrows()
    }

    pub fn epsilon(&self) -> f64 {
        self.table.epsilon
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.rows()) {
            Some(i) => Err(Error::Dimension(format!("sample {i} outside a {}-row table", self.rows()))),
            None => Ok(()),
        }
    }

    /// Chooses an action per sample ε-greedily (ties go to the lowest index),
    /// records it, and returns the matching weights. ε decays once per call.
    pub fn assign_weights<R: Rng + ?Sized>(&mut self, indices: &[usize], rng: &mut R) -> Result<Vec<f64>> {
        self.check_indices(indices)?;
        let n_actions = self.config.actions.len();
        let epsilon = self.table.epsilon;
        let weights = indices
            .iter()
            .map(|&i| {
                let action = if rng.random::<f64>() < epsilon {
                    rng.random_range(0..n_actions)
                } else {
                    argmax_lowest(self.table.q.row(i))
                };
                self.table.last_action[i] = action;
                self.config.actions[action]
            })
            .collect();
        self.table.epsilon *= self.config.epsilon_decay;
        Ok(weights)
    }

    /// `Q[i, a_i] += α (r_i + γ max_a Q[i, a] − Q[i, a_i])`, with the max read
    /// from the row before this sample's update.
    pub fn update_q(&mut self, indices: &[usize], rewards: &[u8]) -> Result<()> {
        self.check_indices(indices)?;
        if indices.len() != rewards.len() {
            return Err(Error::Dimension(format!(
                "{} indices but {} rewards",
                indices.len(),
                rewards.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|&&r| r > 1) {
            return Err(Error::Config(format!("reward {r} is not binary")));
        }
        let (alpha, gamma) = (self.config.alpha, self.config.gamma);
        for (&i, &r) in indices.iter().zip(rewards) {
            let a = self.table.last_action[i];
            let row = self.table.q.row(i);
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let current = row[a];
            self.table.q[[i, a]] = current + alpha * (f64::from(r) + gamma * best - current);
        }
        Ok(())
    }

    /// CSV dump: index, q0..qK, last_action, assigned_weight.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let k = self.config.actions.len();
        let mut header = vec!["index".to_owned()];
        header.extend((0..k).map(|a| format!("q{a}")));
        header.extend(["last_action".to_owned(), "assigned_weight".to_owned()]);
        out.write_record(&header)?;
        for (i, row) in self.table.q.rows().into_iter().enumerate() {
            let a = self.table.last_action[i];
            let mut line = vec![i.to_string()];
            line.extend(row.iter().map(|v| v.to_string()));
            line.push(a.to_string());
            line.push(self.config.actions[a].to_string());
            out.write_record(&line)?;
        }
        out.flush()?;
        Ok(())
    }
}
