use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qweight", version, about = "RL-guided sample weighting for behavioral malware classification")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// TOML run configuration. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Maximum number of folds trained in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory for outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic record file.
    Synth(SynthArgs),
    /// Turn records into a fused embeddings file.
    Featurize(FeaturizeArgs),
    /// Cross-validate the classifier and write a report.
    Train(TrainArgs),
    /// Metric deltas between two reports (candidate minus baseline).
    Compare(CompareArgs),
    /// Summarize a Q-table dump written by `train`.
    Qdump(QdumpArgs),
}

#[derive(Debug, Args, Default)]
pub struct SyntheticArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    /// Fraction of samples labelled 1.
    #[arg(long)]
    pub balance: Option<f64>,
    /// Fraction of samples drawn near the class boundary.
    #[arg(long)]
    pub hard: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub hard_separation: Option<f64>,
    #[arg(long)]
    pub signature_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    /// Output file (default: <out-dir>/records.jsonl).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        s == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StringRuleArg {
    Length,
    FrequencyRank,
    FrequencyCount,
}

#[derive(Debug, Args, Default)]
pub struct FeaturizeOptions {
    /// Extractor as kind:dim, e.g. rp:1280. Repeat for several; replaces the default pair.
    #[arg(long = "backbone")]
    pub backbones: Vec<String>,
    /// Patch size of the random-projection extractors.
    #[arg(long)]
    pub patch: Option<usize>,
    /// Render images and extract embeddings (off: use standardized features directly).
    #[arg(long, value_enum)]
    pub imaging: Option<Switch>,
    /// Encoding for string fields.
    #[arg(long, value_enum)]
    pub string_rule: Option<StringRuleArg>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Line-delimited records.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (default: <out-dir>/embeddings.bin).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub options: FeaturizeOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    ResidualMlp,
    Ann,
    Logreg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Embeddings file.
    #[arg(long, conflicts_with_all = ["records", "synthetic"])]
    pub embeddings: Option<PathBuf>,
    /// Records file, featurized before training.
    #[arg(long, conflicts_with = "synthetic")]
    pub records: Option<PathBuf>,
    /// Generate synthetic records (settings from the config file and flags below).
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub synthetic_options: SyntheticArgs,
    #[command(flatten)]
    pub featurize: FeaturizeOptions,

    /// RL sample weighting.
    #[arg(long, value_enum)]
    pub rl: Option<Switch>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Stem width of the residual MLP.
    #[arg(long)]
    pub stem_width: Option<usize>,
    /// Bottleneck width of the residual blocks.
    #[arg(long)]
    pub bottleneck_width: Option<usize>,

    /// Assign/train/update cycles per fold.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Split whose predictions reward the agent.
    #[arg(long, value_enum)]
    pub update_split: Option<SplitArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub epsilon_decay: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline report (report.json or its run directory).
    pub baseline: PathBuf,
    /// Candidate report.
    pub candidate: PathBuf,
    /// CSV output (default: <out-dir>/comparison.csv when --out-dir is set).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QdumpArgs {
    /// Q-table CSV, or a run directory together with --fold.
    pub table: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
    /// Also list the N rows with the largest action values.
    #[arg(long, default_value_t = 0)]
    pub top: usize,
}
