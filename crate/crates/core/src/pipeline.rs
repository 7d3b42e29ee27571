//! End-to-end wiring: records to embeddings, embeddings to a cross-validated
//! report, all driven by one [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backbones::{fuse, read_embeddings, Embedding, EmbeddingSet, FeatureExtractor, RandomProjectionExtractor};
use crate::dataio::{
    deduplicate, encode, fit_encoding, generate_synthetic, parse_records, standardize, BehaviorRecord,
    EncodingOptions, SyntheticConfig,
};
use crate::harness::{run_cv_detailed, CvConfig, CvRun, Dataset};
use crate::imaging::vector_to_image;
use crate::nn::ModelConfig;
use crate::rl::AgentConfig;
use crate::seed::{self, purpose};
use crate::{Error, Result};

/// `kind:dim`, e.g. `rp:1280` for a random-projection extractor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BackboneSpec {
    pub kind: String,
    pub dim: usize,
}

impl FromStr for BackboneSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, dim) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("backbone `{s}` is not of the form kind:dim")))?;
        if kind != "rp" {
            return Err(Error::Config(format!("unknown backbone kind `{kind}` (expected rp)")));
        }
        let dim = dim
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Config(format!("backbone `{s}` needs a positive dimension")))?;
        Ok(Self { kind: kind.to_owned(), dim })
    }
}

impl TryFrom<String> for BackboneSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BackboneSpec> for String {
    fn from(b: BackboneSpec) -> String {
        b.to_string()
    }
}

impl fmt::Display for BackboneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturizeConfig {
    pub backbones: Vec<BackboneSpec>,
    pub patch: usize,
    /// When false, the standardized feature vector is used as the embedding
    /// directly and no images are rendered.
    pub imaging: bool,
    pub encoding: EncodingOptions,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        Self {
            backbones: vec![BackboneSpec { kind: "rp".into(), dim: 1280 }, BackboneSpec { kind: "rp".into(), dim: 2048 }],
            patch: RandomProjectionExtractor::DEFAULT_PATCH,
            imaging: true,
            encoding: EncodingOptions::default(),
        }
    }
}

impl FeaturizeConfig {
    pub fn extractors(&self, seed: u64) -> Result<Vec<RandomProjectionExtractor>> {
        if self.imaging && self.backbones.is_empty() {
            return Err(Error::Config("at least one backbone is required".into()));
        }
        self.backbones
            .iter()
            .enumerate()
            .map(|(i, b)| {
                RandomProjectionExtractor::new(format!("{b}#{i}"), seed::derive(seed, i, purpose::BACKBONE), self.patch, b.dim)
            })
            .collect()
    }
}

/// Where the samples come from. Exactly one field must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub records: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Records(PathBuf),
    Embeddings(PathBuf),
    Synthetic(SyntheticConfig),
}

impl DatasetSpec {
    pub fn source(&self) -> Result<DatasetSource> {
        match (&self.records, &self.embeddings, &self.synthetic) {
            (Some(p), None, None) => Ok(DatasetSource::Records(p.clone())),
            (None, Some(p), None) => Ok(DatasetSource::Embeddings(p.clone())),
            (None, None, Some(s)) => Ok(DatasetSource::Synthetic(s.clone())),
            (None, None, None) => Err(Error::Config("no dataset source given".into())),
            _ => Err(Error::Config("exactly one dataset source may be given".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    pub jobs: usize,
    pub rl: bool,
    pub dataset: DatasetSpec,
    pub featurize: FeaturizeConfig,
    pub model: ModelConfig,
    pub agent: AgentConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            folds: 5,
            jobs: 1,
            rl: true,
            dataset: DatasetSpec::default(),
            featurize: FeaturizeConfig::default(),
            model: ModelConfig::default(),
            agent: AgentConfig::default(),
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            seed: self.seed,
            model: self.model.clone(),
            agent: self.rl.then(|| self.agent.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        self.dataset.source()?;
        self.agent.validate()?;
        Ok(())
    }
}

/// Result of featurizing a record set.
#[derive(Debug, Clone)]
pub struct Featurized {
    pub embeddings: EmbeddingSet,
    pub duplicates_removed: usize,
    pub warnings: Vec<String>,
}

/// Records to fused embeddings: deduplicate, encode, standardize every column
/// over the whole set, render each row as an image, embed it with every
/// extractor, and concatenate.
///
/// The standardization here is label-free and only shapes the images; the
/// classifier's inputs are standardized again per fold from training rows.
pub fn featurize(records: Vec<BehaviorRecord>, config: &FeaturizeConfig, seed: u64) -> Result<Featurized> {
    let before = records.len();
    let records = deduplicate(records);
    let duplicates_removed = before - records.len();
    if records.is_empty() {
        return Err(Error::Format("no records to featurize".into()));
    }
    let plan = fit_encoding(&records, &config.encoding)?;
    let (matrix, warnings) = encode(&records, &plan)?;
    let (scaled, _) = standardize(matrix.values.view(), None)?;

    let values: Array2<f32> = if config.imaging {
        let extractors = config.extractors(seed)?;
        let rows: Vec<Vec<f64>> = (0..scaled.nrows())
            .into_par_iter()
            .map(|i| embed_row(&scaled.row(i).to_vec(), &extractors))
            .collect::<Result<_>>()?;
        let dim = rows[0].len();
        Array2::from_shape_vec((rows.len(), dim), rows.into_iter().flatten().map(|v| v as f32).collect())
            .map_err(|e| Error::Dimension(e.to_string()))?
    } else {
        scaled.mapv(|v| v as f32)
    };
    let labels = matrix.labels.iter().map(|&y| y as u32).collect();
    Ok(Featurized { embeddings: EmbeddingSet::new(values, labels)?, duplicates_removed, warnings })
}

fn embed_row(row: &[f64], extractors: &[RandomProjectionExtractor]) -> Result<Vec<f64>> {
    let image = vector_to_image(row)?;
    let parts: Vec<Embedding> = extractors.iter().map(|e| e.extract(&image)).collect::<Result<_>>()?;
    Ok(fuse(&parts)?.values)
}

/// Loads or builds the embeddings named by the dataset spec.
pub fn load_embeddings(config: &RunConfig) -> Result<EmbeddingSet> {
    match config.dataset.source()? {
        DatasetSource::Embeddings(path) => read_embeddings(path),
        DatasetSource::Records(path) => {
            let file = std::fs::File::open(&path)?;
            let records = parse_records(std::io::BufReader::new(file))?;
            Ok(featurize(records, &config.featurize, config.seed)?.embeddings)
        }
        DatasetSource::Synthetic(synth) => {
            let (records, _) = generate_synthetic(&synth)?;
            Ok(featurize(records, &config.featurize, config.seed)?.embeddings)
        }
    }
}

/// Runs cross-validation for a full configuration.
pub fn run_experiment(config: &RunConfig) -> Result<CvRun> {
    config.validate()?;
    let set = load_embeddings(config)?;
    run_cv_detailed(&Dataset::from_embeddings(&set), &config.cv_config(), config.jobs)
}
