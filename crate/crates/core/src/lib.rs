//! Reinforcement-learning guided sample weighting for behavioral malware
//! classification.
//!
//! The pipeline runs raw behavioral records through preprocessing
//! ([`dataio`]), renders each standardized feature vector as an RGB image
//! ([`imaging`]), embeds the image with frozen extractors and concatenates the
//! embeddings ([`backbones`]), and trains a residual MLP ([`nn`]) whose
//! per-sample loss weights are chosen by a tabular Q-learning agent ([`rl`]).
//! [`harness`] drives stratified k-fold evaluation and [`pipeline`] wires the
//! pieces together behind a single run configuration.

pub mod backbones;
pub mod dataio;
mod error;
pub mod harness;
pub mod imaging;
pub mod nn;
pub mod pipeline;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
