//! Deterministic random streams derived from a single master seed.
//!
//! Every consumer of randomness gets its own ChaCha stream so that the order
//! in which folds or components run never changes what they draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Fold-scoped streams are offset by `fold * STRIDE`.
pub mod purpose {
    pub const FOLDS: u64 = 1;
    pub const SYNTHETIC: u64 = 2;
    pub const BACKBONE: u64 = 3;
    pub const MODEL_INIT: u64 = 4;
    pub const TRAIN: u64 = 5;
    pub const AGENT: u64 = 6;
    pub const STRIDE: u64 = 16;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn fold_stream(seed: u64, fold: usize, purpose: u64) -> ChaCha8Rng {
    stream(seed, (fold as u64 + 1) * purpose::STRIDE + purpose)
}

/// A derived 64-bit seed for the `index`-th component of a kind, e.g. the
/// second backbone.
pub fn derive(seed: u64, index: usize, purpose: u64) -> u64 {
    use rand::Rng;
    fold_stream(seed, index, purpose).random()
}
