//! Frozen feature extractors, embedding fusion, and the embeddings file
//! format used to import externally computed backbone outputs.

mod extractor;
mod file;
mod fusion;

pub use extractor::{FeatureExtractor, RandomProjectionExtractor};
pub use file::{read_embeddings, write_embeddings, EmbeddingSet, FORMAT_VERSION, HEADER_BYTES};
pub use fusion::{fuse, Embedding, FusedEmbedding, LayoutEntry};
