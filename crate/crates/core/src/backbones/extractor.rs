use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::Embedding;
use crate::imaging::{FeatureImage, CHANNELS, IMAGE_SIZE};
use crate::seed;
use crate::{Error, Result};

/// A frozen image embedder. Implementations must be pure: extracting the same
/// image twice yields identical vectors.
pub trait FeatureExtractor: Send + Sync {
    fn id(&self) -> &str;
    fn output_dim(&self) -> usize;
    fn extract(&self, image: &FeatureImage) -> Result<Embedding>;
}

/// Patch-wise random projection with ReLU and global average pooling.
///
/// The image is cut into non-overlapping `patch × patch` tiles; each tile is
/// flattened (row, column, channel order, scaled to [0, 1]) and projected by a
/// fixed matrix drawn once from the seed.
#[derive(Debug, Clone)]
pub struct RandomProjectionExtractor {
    id: String,
    seed: u64,
    patch: usize,
    projection: Array2<f64>,
}

impl RandomProjectionExtractor {
    pub const DEFAULT_PATCH: usize = 16;

    pub fn new(id: impl Into<String>, seed: u64, patch: usize, output_dim: usize) -> Result<Self> {
        if patch == 0 || IMAGE_SIZE % patch != 0 {
            return Err(Error::Config(format!("patch size {patch} must divide {IMAGE_SIZE}")));
        }
        if output_dim == 0 {
            return Err(Error::Config("extractor output dimension must be positive".into()));
        }
        let fan_in = CHANNELS * patch * patch;
        let scale = 1.0 / (fan_in as f64).sqrt();
        let mut rng = seed::stream(seed, seed::purpose::BACKBONE);
        let projection =
            Array2::from_shape_simple_fn((fan_in, output_dim), || rng.random_range(-1.0..1.0) * scale);
        Ok(Self { id: id.into(), seed, patch, projection })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn patches_per_side(&self) -> usize {
        IMAGE_SIZE / self.patch
    }

    /// One row per patch, patches in row-major order.
    pub fn patch_matrix(&self, image: &FeatureImage) -> Array2<f64> {
        let p = self.patch;
        let side = self.patches_per_side();
        let px = image.pixels();
        let mut out = Array2::<f64>::zeros((side * side, CHANNELS * p * p));
        for (n, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let (pr, pc) = (n / side, n % side);
            let mut k = 0;
            for dy in 0..p {
                let start = ((pr * p + dy) * IMAGE_SIZE + pc * p) * CHANNELS;
                for &byte in &px[start..start + p * CHANNELS] {
                    row[k] = f64::from(byte) / 255.0;
                    k += 1;
                }
            }
        }
        out
    }
}

impl FeatureExtractor for RandomProjectionExtractor {
    fn id(&self) -> &str {
        &self.id
    }

    fn output_dim(&self) -> usize {
        self.projection.ncols()
    }

    fn extract(&self, image: &FeatureImage) -> Result<Embedding> {
        if image.pixels().len() != IMAGE_SIZE * IMAGE_SIZE * CHANNELS {
            return Err(Error::Dimension("extractor expects a 224x224x3 image".into()));
        }
        let mut activations = self.patch_matrix(image).dot(&self.projection);
        activations.mapv_inplace(|v| v.max(0.0));
        let pooled: Array1<f64> = activations.mean_axis(Axis(0)).expect("at least one patch");
        Embedding::new(self.id.clone(), pooled.to_vec())
    }
}
