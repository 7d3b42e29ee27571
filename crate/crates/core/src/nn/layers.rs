use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs × outputs`, so a batch transforms as `x · W + b`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

pub(crate) enum Init {
    HeUniform,
    GlorotUniform,
}

impl Dense {
    pub(crate) fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, init: Init, rng: &mut R) -> Self {
        let limit = match init {
            Init::HeUniform => (6.0 / inputs as f64).sqrt(),
            Init::GlorotUniform => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        let weight = Array2::from_shape_simple_fn((inputs, outputs), || rng.random_range(-limit..limit));
        Self { weight, bias: Array1::zeros(outputs) }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Returns `(dx, dW, db)` for upstream gradient `dz`.
    pub fn backward(
        &self,
        x: ArrayView2<f64>,
        dz: ArrayView2<f64>,
        need_dx: bool,
    ) -> (Option<Array2<f64>>, Array2<f64>, Array1<f64>) {
        let dw = x.t().dot(&dz);
        let db = dz.sum_axis(Axis(0));
        let dx = need_dx.then(|| dz.dot(&self.weight.t()));
        (dx, dw, db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

pub(crate) struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl BatchNorm {
    pub(crate) fn new(channels: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: Array1::ones(channels),
            beta: Array1::zeros(channels),
            running_mean: Array1::zeros(channels),
            running_var: Array1::ones(channels),
            momentum,
            epsilon,
        }
    }

    /// Gamma, beta, and both running statistics.
    pub fn param_count(&self) -> usize {
        4 * self.gamma.len()
    }

    /// Normalizes with batch statistics and folds them into the running averages.
    pub(crate) fn forward_train(&mut self, x: ArrayView2<f64>) -> (Array2<f64>, BnCache) {
        let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
        let var = x.var_axis(Axis(0), 0.0);
        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let xhat = (&x - &mean) * &inv_std;
        let y = &xhat * &self.gamma + &self.beta;

        let m = self.momentum;
        self.running_mean.zip_mut_with(&mean, |r, &b| *r = m * *r + (1.0 - m) * b);
        self.running_var.zip_mut_with(&var, |r, &b| *r = m * *r + (1.0 - m) * b);
        (y, BnCache { xhat, inv_std })
    }

    pub fn forward_infer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let scale = Array1::from_iter(
            self.gamma
                .iter()
                .zip(&self.running_var)
                .map(|(g, v)| g / (v + self.epsilon).sqrt()),
        );
        (&x - &self.running_mean) * &scale + &self.beta
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub(crate) fn backward(&self, cache: &BnCache, dy: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let b = dy.nrows() as f64;
        let dbeta = dy.sum_axis(Axis(0));
        let dgamma = (&dy * &cache.xhat).sum_axis(Axis(0));
        let dxhat = &dy * &self.gamma;
        let sum_dxhat = dxhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&dxhat * &cache.xhat).sum_axis(Axis(0));
        let dx = ((&dxhat * b) - &sum_dxhat - &(&cache.xhat * &sum_dxhat_xhat)) * &(&cache.inv_std / b);
        (dx, dgamma, dbeta)
    }
}

pub(crate) fn relu(x: Array2<f64>) -> Array2<f64> {
    x.mapv_into(|v| v.max(0.0))
}

/// Multiplies `dy` by the ReLU derivative at pre-activation `z`.
pub(crate) fn relu_backward(z: ArrayView2<f64>, mut dy: Array2<f64>) -> Array2<f64> {
    dy.zip_mut_with(&z, |d, &zv| {
        if zv <= 0.0 {
            *d = 0.0;
        }
    });
    dy
}

/// Inverted-dropout mask: kept units are scaled by `1 / (1 - rate)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, rate: f64, rng: &mut R) -> Option<Array2<f64>> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Some(Array2::from_shape_simple_fn((rows, cols), || {
        if rng.random::<f64>() < keep {
            scale
        } else {
            0.0
        }
    }))
}

pub(crate) fn apply_mask(x: Array2<f64>, mask: Option<&Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => x * m,
        None => x,
    }
}
