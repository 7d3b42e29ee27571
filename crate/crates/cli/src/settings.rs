//! Resolves the effective run configuration: flags override the config file,
//! which overrides built-in defaults.

use std::path::{Path, PathBuf};

use qweight::dataio::{StringRule, SyntheticConfig};
use qweight::nn::ModelKind;
use qweight::pipeline::{BackboneSpec, DatasetSpec, RunConfig};
use qweight::rl::UpdateSplit;
use qweight::{Error, Result};

use crate::args::{Cli, FeaturizeOptions, ModelArg, SplitArg, StringRuleArg, SyntheticArgs, TrainArgs};

pub const DEFAULT_OUT_DIR: &str = "qweight-out";

pub fn load(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            require_exists(path)?;
            let text = std::fs::read_to_string(path)?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        if let Some(s) = config.dataset.synthetic.as_mut() {
            s.seed = seed;
        }
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = Some(dir.clone());
    }
    Ok(config)
}

pub fn out_dir(config: &RunConfig) -> PathBuf {
    config.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} does not exist", path.display())))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Synthetic settings: the config file's block (or defaults) with flags applied.
/// The seed comes from the run seed unless the file's block sets its own.
pub fn synthetic(config: &RunConfig, flags: &SyntheticArgs) -> SyntheticConfig {
    let mut s = config
        .dataset
        .synthetic
        .clone()
        .unwrap_or_else(|| SyntheticConfig { seed: config.seed, ..Default::default() });
    set(&mut s.n_samples, flags.samples);
    set(&mut s.n_features, flags.features);
    set(&mut s.class_balance, flags.balance);
    set(&mut s.hard_fraction, flags.hard);
    set(&mut s.separation, flags.separation);
    set(&mut s.hard_separation, flags.hard_separation);
    set(&mut s.signature_fraction, flags.signature_fraction);
    s
}

fn any_synthetic_flag(flags: &SyntheticArgs) -> bool {
    flags.samples.is_some()
        || flags.features.is_some()
        || flags.balance.is_some()
        || flags.hard.is_some()
        || flags.separation.is_some()
        || flags.hard_separation.is_some()
        || flags.signature_fraction.is_some()
}

pub fn apply_featurize(config: &mut RunConfig, flags: &FeaturizeOptions) -> Result<()> {
    let f = &mut config.featurize;
    if !flags.backbones.is_empty() {
        f.backbones = flags.backbones.iter().map(|b| b.parse::<BackboneSpec>()).collect::<Result<_>>()?;
    }
    set(&mut f.patch, flags.patch);
    set(&mut f.imaging, flags.imaging.map(bool::from));
    if let Some(rule) = flags.string_rule {
        f.encoding.default_string_rule = match rule {
            StringRuleArg::Length => StringRule::Length,
            StringRuleArg::FrequencyRank => StringRule::FrequencyRank,
            StringRuleArg::FrequencyCount => StringRule::FrequencyCount,
        };
    }
    Ok(())
}

pub fn apply_train(config: &mut RunConfig, flags: &TrainArgs) -> Result<()> {
    if let Some(p) = &flags.embeddings {
        config.dataset = DatasetSpec { embeddings: Some(p.clone()), ..Default::default() };
    } else if let Some(p) = &flags.records {
        config.dataset = DatasetSpec { records: Some(p.clone()), ..Default::default() };
    } else if flags.synthetic || any_synthetic_flag(&flags.synthetic_options) {
        let s = synthetic(config, &flags.synthetic_options);
        config.dataset = DatasetSpec { synthetic: Some(s), ..Default::default() };
    }
    apply_featurize(config, &flags.featurize)?;

    set(&mut config.rl, flags.rl.map(bool::from));
    set(&mut config.folds, flags.folds);
    let m = &mut config.model;
    set(&mut m.epochs, flags.epochs);
    set(&mut m.batch_size, flags.batch);
    set(&mut m.learning_rate, flags.lr);
    set(&mut m.stem_width, flags.stem_width);
    set(&mut m.bottleneck_width, flags.bottleneck_width);
    if let Some(kind) = flags.model {
        m.kind = match kind {
            ModelArg::ResidualMlp => ModelKind::ResidualMlp,
            ModelArg::Ann => ModelKind::Ann,
            ModelArg::Logreg => ModelKind::Logreg,
        };
    }
    let a = &mut config.agent;
    set(&mut a.rounds, flags.rounds);
    set(&mut a.epsilon, flags.epsilon);
    set(&mut a.epsilon_decay, flags.epsilon_decay);
    set(&mut a.alpha, flags.alpha);
    set(&mut a.gamma, flags.gamma);
    if let Some(split) = flags.update_split {
        a.update_split = match split {
            SplitArg::Train => UpdateSplit::Train,
            SplitArg::Validation => UpdateSplit::Validation,
        };
    }

    config.validate()?;
    for path in [&config.dataset.records, &config.dataset.embeddings].into_iter().flatten() {
        require_exists(path)?;
    }
    Ok(())
}
