use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_folds, FoldPlan};
use super::metrics::{metrics, ConfusionMatrix};
use super::profile::{measure, memory_method, Measurement};
use super::report::{DatasetInfo, MetricSummary, Pooled, RunReport};
use super::roc::roc_auc;
use crate::backbones::EmbeddingSet;
use crate::dataio::Standardizer;
use crate::nn::{predict, EpochLoss, Model, ModelConfig, Trainer};
use crate::rl::{compute_rewards, Agent, AgentConfig, UpdateSplit};
use crate::seed::{fold_stream, purpose};
use crate::{Error, Result};

/// Binary-labelled feature matrix plus the content fingerprint it came from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub fingerprint: String,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, fingerprint: impl Into<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Format("labels must be 0 or 1".into()));
        }
        Ok(Self { features, labels, fingerprint: fingerprint.into() })
    }

    pub fn from_embeddings(set: &EmbeddingSet) -> Self {
        Self { features: set.features_f64(), labels: set.labels_usize(), fingerprint: set.fingerprint() }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub model: ModelConfig,
    /// `None` trains every fold with unit weights.
    pub agent: Option<AgentConfig>,
}

/// One fold's splits, standardized with statistics from its training rows.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub fold: usize,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    pub validation_x: Array2<f64>,
    pub validation_y: Vec<usize>,
    pub standardizer: Standardizer,
}

impl FoldData {
    pub fn from_plan(dataset: &Dataset, plan: &FoldPlan, fold: usize) -> Result<Self> {
        if plan.assignment.len() != dataset.rows() {
            return Err(Error::Dimension("fold plan does not cover the dataset".into()));
        }
        let train_indices = plan.train_indices(fold);
        let validation_indices = plan.validation_indices(fold);
        if train_indices.is_empty() || validation_indices.is_empty() {
            return Err(Error::Config(format!("fold {fold} has an empty split")));
        }
        let raw_train = dataset.features.select(Axis(0), &train_indices);
        let standardizer = Standardizer::fit(raw_train.view())?;
        let train_x = standardizer.transform(raw_train.view())?;
        let validation_x =
            standardizer.transform(dataset.features.select(Axis(0), &validation_indices).view())?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.labels[i]).collect::<Vec<_>>();
        Ok(Self {
            fold,
            train_y: pick(&train_indices),
            validation_y: pick(&validation_indices),
            train_indices,
            validation_indices,
            train_x,
            validation_x,
            standardizer,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub index: usize,
    pub label: usize,
    pub predicted: usize,
    /// Probability of class 1.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCount {
    pub weight: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldTimings {
    pub train: Measurement,
    pub inference: Measurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: super::metrics::MetricSet,
    /// Distribution of the weights used in the final training round.
    pub weights: Vec<WeightCount>,
    pub epsilon_final: Option<f64>,
    pub loss_trace: Vec<EpochLoss>,
    pub validation: Vec<Prediction>,
    pub timings: FoldTimings,
}

/// A fold's report together with the trained model and agent.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub report: FoldReport,
    pub model: Model,
    pub agent: Option<Agent>,
}

fn weight_counts(weights: &[f64]) -> Vec<WeightCount> {
    let mut counts: Vec<WeightCount> = Vec::new();
    for &w in weights {
        match counts.iter_mut().find(|c| c.weight == w) {
            Some(c) => c.count += 1,
            None => counts.push(WeightCount { weight: w, count: 1 }),
        }
    }
    counts.sort_by(|a, b| a.weight.total_cmp(&b.weight));
    counts
}

fn epochs_for_round(total: usize, rounds: usize, round: usize) -> usize {
    total / rounds + usize::from(round < total % rounds)
}

/// Trains and evaluates one fold.
///
/// With an agent: for each round, assign weights to the training samples,
/// train for that round's share of the epochs, predict on the update split,
/// reward correct predictions, and update the Q-table. Without one, the same
/// flow runs with unit weights and no updates. The model is evaluated on the
/// validation split afterwards.
pub fn run_fold(data: &FoldData, model_config: &ModelConfig, agent_config: Option<&AgentConfig>, seed: u64) -> Result<FoldOutcome> {
    let fold = data.fold;
    if model_config.input_dim != data.train_x.ncols() {
        return Err(Error::Config(format!(
            "model input_dim {} but fold data has {} features",
            model_config.input_dim,
            data.train_x.ncols()
        )));
    }
    let n_train = data.train_y.len();
    let n_val = data.validation_y.len();
    let rounds = agent_config.map_or(1, |a| a.rounds);
    let epochs = model_config.epochs;
    if epochs > 0 && rounds > epochs {
        return Err(Error::Config(format!("{rounds} rounds cannot share {epochs} epochs")));
    }

    let mut model = Model::new(model_config.clone(), &mut fold_stream(seed, fold, purpose::MODEL_INIT))?;
    let mut train_rng = fold_stream(seed, fold, purpose::TRAIN);
    let mut agent_rng = fold_stream(seed, fold, purpose::AGENT);
    let mut agent = match agent_config {
        Some(cfg) => {
            let rows = match cfg.update_split {
                UpdateSplit::Train => n_train,
                UpdateSplit::Validation => n_train + n_val,
            };
            Some(Agent::new(rows, cfg.clone())?)
        }
        None => None,
    };

    let train_indices: Vec<usize> = (0..n_train).collect();
    let training = measure(|| -> Result<(Vec<EpochLoss>, Vec<f64>)> {
        let mut trainer = Trainer::new(&model, n_train, epochs);
        let mut trace = Vec::with_capacity(epochs);
        let mut weights = vec![1.0; n_train];
        for round in 0..rounds {
            if let Some(agent) = agent.as_mut() {
                weights = agent.assign_weights(&train_indices, &mut agent_rng)?;
            }
            trace.extend(trainer.run_epochs(
                &mut model,
                data.train_x.view(),
                &data.train_y,
                &weights,
                epochs_for_round(epochs, rounds, round),
                &mut train_rng,
            )?);
            if let Some(agent) = agent.as_mut() {
                let (x, y, rows): (_, _, Vec<usize>) = match agent.config().update_split {
                    UpdateSplit::Train => (&data.train_x, &data.train_y, train_indices.clone()),
                    UpdateSplit::Validation => {
                        (&data.validation_x, &data.validation_y, (n_train..n_train + n_val).collect())
                    }
                };
                let (_, predicted) = predict(&model, x.view())?;
                agent.update_q(&rows, &compute_rewards(&predicted, y)?)?;
            }
        }
        Ok((trace, weights))
    });
    let ((loss_trace, final_weights), train_time) = (training.0?, training.1);

    let (inference, inference_time) = measure(|| predict(&model, data.validation_x.view()));
    let (probs, predicted) = inference?;

    let scores: Vec<f64> = probs.column(1).to_vec();
    let confusion = ConfusionMatrix::from_predictions(&predicted, &data.validation_y)?;
    let mut fold_metrics = metrics(&confusion);
    fold_metrics.auc = roc_auc(&scores, &data.validation_y).ok().map(|r| r.auc);

    let validation = data
        .validation_indices
        .iter()
        .enumerate()
        .map(|(j, &index)| Prediction { index, label: data.validation_y[j], predicted: predicted[j], score: scores[j] })
        .collect();

    let report = FoldReport {
        fold,
        n_train,
        n_validation: n_val,
        confusion,
        metrics: fold_metrics,
        weights: weight_counts(&final_weights),
        epsilon_final: agent.as_ref().map(Agent::epsilon),
        loss_trace,
        validation,
        timings: FoldTimings { train: train_time, inference: inference_time },
    };
    Ok(FoldOutcome { report, model, agent })
}

/// Runs one fold of the plan from scratch; a pure function of its inputs.
pub fn run_planned_fold(dataset: &Dataset, plan: &FoldPlan, fold: usize, config: &CvConfig) -> Result<FoldOutcome> {
    let data = FoldData::from_plan(dataset, plan, fold)?;
    run_fold(&data, &config.model, config.agent.as_ref(), config.seed)
}

/// Stratified k-fold cross-validation. Folds run on up to `jobs` threads and
/// are merged by fold index.
pub fn run_cv(dataset: &Dataset, config: &CvConfig, jobs: usize) -> Result<RunReport> {
    run_cv_detailed(dataset, config, jobs).map(|run| run.report)
}

/// A cross-validation report plus each fold's final agent (if RL was on).
#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: RunReport,
    pub agents: Vec<Option<Agent>>,
}

pub fn run_cv_detailed(dataset: &Dataset, config: &CvConfig, jobs: usize) -> Result<CvRun> {
    let mut config = config.clone();
    config.model.input_dim = dataset.dim();
    config.model.validate()?;
    if let Some(agent) = &config.agent {
        agent.validate()?;
    }
    let plan = stratified_folds(&dataset.labels, config.folds, config.seed)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invariant(e.to_string()))?;
    let outcomes: Vec<(FoldReport, Option<Agent>)> = pool.install(|| {
        (0..config.folds)
            .into_par_iter()
            .map(|fold| run_planned_fold(dataset, &plan, fold, &config).map(|o| (o.report, o.agent)))
            .collect::<Result<Vec<_>>>()
    })?;
    let (reports, agents): (Vec<FoldReport>, Vec<Option<Agent>>) = outcomes.into_iter().unzip();

    let confusion: ConfusionMatrix = reports.iter().map(|r| r.confusion).sum();
    if confusion.total() as usize != dataset.rows() {
        return Err(Error::Invariant(format!(
            "aggregate confusion covers {} of {} samples",
            confusion.total(),
            dataset.rows()
        )));
    }
    let mut pooled_predictions: Vec<&Prediction> = reports.iter().flat_map(|r| &r.validation).collect();
    pooled_predictions.sort_by_key(|p| p.index);
    let scores: Vec<f64> = pooled_predictions.iter().map(|p| p.score).collect();
    let labels: Vec<usize> = pooled_predictions.iter().map(|p| p.label).collect();
    let roc = roc_auc(&scores, &labels)?;
    let mut pooled_metrics = metrics(&confusion);
    pooled_metrics.auc = Some(roc.auc);

    let report = RunReport {
        seed: config.seed,
        dataset: DatasetInfo {
            fingerprint: dataset.fingerprint.clone(),
            rows: dataset.rows(),
            dim: dataset.dim(),
            positives: dataset.labels.iter().filter(|&&y| y == 1).count(),
        },
        memory_method: memory_method(),
        fold_mean: MetricSummary::from_folds(reports.iter().map(|r| &r.metrics)),
        pooled: Pooled { confusion, metrics: pooled_metrics, roc },
        folds: reports,
        config,
    };
    Ok(CvRun { report, agents })
}
