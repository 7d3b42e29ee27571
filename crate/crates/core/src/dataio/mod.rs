//! Record ingestion and preprocessing: parsing, deduplication, categorical
//! encoding, standardization, and synthetic data generation.

mod encoding;
mod records;
mod scaling;
mod synthetic;

pub use encoding::{
    encode, fit_encoding, write_csv, EncodingOptions, EncodingPlan, FeatureMatrix, FieldRule,
    StringRule,
};
pub use records::{deduplicate, parse_records, write_records, BehaviorRecord, FieldValue, ValueKind};
pub use scaling::{standardize, Standardizer};
pub use synthetic::{feature_name, generate_synthetic, Difficulty, SyntheticConfig};
