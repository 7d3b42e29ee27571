use ndarray::{Array2, ArrayD, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use super::config::{ModelConfig, ModelKind};
use super::layers::{apply_mask, dropout_mask, relu, relu_backward, BatchNorm, BnCache, Dense, Init};
use super::loss::{loss_grad_logits, smoothed_weighted_loss, softmax_rows};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running-stat updates, dropout active.
    Train,
    /// Running statistics, no dropout.
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub down: Dense,
    pub bn: BatchNorm,
    pub up: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Residual {
        stem: Dense,
        stem_bn: BatchNorm,
        blocks: Vec<ResidualBlock>,
        head: Dense,
    },
    Feedforward {
        hidden: Vec<Dense>,
        head: Dense,
    },
    /// A single output unit: `P(y = 1 | x) = σ(w·x + b)`.
    Logistic {
        linear: Dense,
    },
}

/// Per-tensor gradients, ordered like [`Model::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<ArrayD<f64>>);

impl Gradients {
    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

struct BlockCache {
    input: Array2<f64>,
    down_pre: Array2<f64>,
    bn: BnCache,
    up_input: Array2<f64>,
    sum_pre: Array2<f64>,
    mask: Option<Array2<f64>>,
}

struct HiddenCache {
    input: Array2<f64>,
    pre: Array2<f64>,
    mask: Option<Array2<f64>>,
}

enum NetCache {
    Residual {
        stem_pre: Array2<f64>,
        stem_bn: BnCache,
        stem_mask: Option<Array2<f64>>,
        blocks: Vec<BlockCache>,
        head_input: Array2<f64>,
    },
    Feedforward {
        hidden: Vec<HiddenCache>,
        head_input: Array2<f64>,
    },
    Logistic,
}

/// Activations recorded by a training-mode forward pass, consumed by
/// [`Model::backward`].
pub struct Tape {
    input: Array2<f64>,
    cache: NetCache,
    probs: Array2<f64>,
}

impl Tape {
    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logistic_probs(z: ArrayView2<f64>) -> Array2<f64> {
    let mut p = Array2::zeros((z.nrows(), 2));
    for (i, &zi) in z.column(0).iter().enumerate() {
        p[[i, 0]] = sigmoid(-zi);
        p[[i, 1]] = sigmoid(zi);
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    network: Network,
}

impl Model {
    /// Builds and initializes a network: He-uniform weights for layers that
    /// feed a ReLU, Glorot-uniform for output layers, zero biases, unit BN
    /// scale.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (d, c) = (config.input_dim, config.num_classes);
        let network = match config.kind {
            ModelKind::ResidualMlp => {
                let (w, b) = (config.stem_width, config.bottleneck_width);
                let stem = Dense::new(d, w, Init::HeUniform, rng);
                let stem_bn = BatchNorm::new(w, config.bn_momentum, config.bn_epsilon);
                let blocks = (0..config.residual_blocks)
                    .map(|_| ResidualBlock {
                        down: Dense::new(w, b, Init::HeUniform, rng),
                        bn: BatchNorm::new(b, config.bn_momentum, config.bn_epsilon),
                        up: Dense::new(b, w, Init::HeUniform, rng),
                    })
                    .collect();
                let head = Dense::new(w, c, Init::GlorotUniform, rng);
                Network::Residual { stem, stem_bn, blocks, head }
            }
            ModelKind::Ann => {
                let mut width = d;
                let hidden = config
                    .hidden
                    .iter()
                    .map(|&h| {
                        let layer = Dense::new(width, h, Init::HeUniform, rng);
                        width = h;
                        layer
                    })
                    .collect();
                let head = Dense::new(width, c, Init::GlorotUniform, rng);
                Network::Feedforward { hidden, head }
            }
            ModelKind::Logreg => Network::Logistic { linear: Dense::new(d, 1, Init::GlorotUniform, rng) },
        };
        Ok(Self { config, network })
    }

    pub fn from_parts(config: ModelConfig, network: Network) -> Result<Self> {
        config.validate()?;
        let model = Self { config, network };
        let mut probe = crate::seed::stream(0, 0);
        let expected = Model::new(model.config.clone(), &mut probe)?;
        let shapes = |m: &Model| m.parameters().iter().map(|p| p.shape().to_vec()).collect::<Vec<_>>();
        if shapes(&expected) != shapes(&model) {
            return Err(Error::Dimension("network shapes do not match the configuration".into()));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.network
    }

    /// Trainable tensors in declared layer order.
    pub fn parameters(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut out = Vec::new();
        fn dense<'a>(out: &mut Vec<ArrayViewD<'a, f64>>, l: &'a Dense) {
            out.push(l.weight.view().into_dyn());
            out.push(l.bias.view().into_dyn());
        }
        match &self.network {
            Network::Residual { stem, stem_bn, blocks, head } => {
                dense(&mut out, stem);
                out.push(stem_bn.gamma.view().into_dyn());
                out.push(stem_bn.beta.view().into_dyn());
                for b in blocks {
                    dense(&mut out, &b.down);
                    out.push(b.bn.gamma.view().into_dyn());
                    out.push(b.bn.beta.view().into_dyn());
                    dense(&mut out, &b.up);
                }
                dense(&mut out, head);
            }
            Network::Feedforward { hidden, head } => {
                for l in hidden {
                    dense(&mut out, l);
                }
                dense(&mut out, head);
            }
            Network::Logistic { linear } => dense(&mut out, linear),
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut out = Vec::new();
        fn dense<'a>(out: &mut Vec<ArrayViewMutD<'a, f64>>, l: &'a mut Dense) {
            out.push(l.weight.view_mut().into_dyn());
            out.push(l.bias.view_mut().into_dyn());
        }
        match &mut self.network {
            Network::Residual { stem, stem_bn, blocks, head } => {
                dense(&mut out, stem);
                out.push(stem_bn.gamma.view_mut().into_dyn());
                out.push(stem_bn.beta.view_mut().into_dyn());
                for b in blocks.iter_mut() {
                    dense(&mut out, &mut b.down);
                    out.push(b.bn.gamma.view_mut().into_dyn());
                    out.push(b.bn.beta.view_mut().into_dyn());
                    dense(&mut out, &mut b.up);
                }
                dense(&mut out, head);
            }
            Network::Feedforward { hidden, head } => {
                for l in hidden.iter_mut() {
                    dense(&mut out, l);
                }
                dense(&mut out, head);
            }
            Network::Logistic { linear } => dense(&mut out, linear),
        }
        out
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm> {
        match &mut self.network {
            Network::Residual { stem_bn, blocks, .. } => {
                let mut v = vec![stem_bn];
                v.extend(blocks.iter_mut().map(|b| &mut b.bn));
                v
            }
            _ => Vec::new(),
        }
    }

    /// Non-trainable state (BN running mean and variance), in layer order.
    pub fn buffers(&self) -> Vec<ArrayViewD<'_, f64>> {
        match &self.network {
            Network::Residual { stem_bn, blocks, .. } => std::iter::once(stem_bn)
                .chain(blocks.iter().map(|b| &b.bn))
                .flat_map(|bn| [bn.running_mean.view().into_dyn(), bn.running_var.view().into_dyn()])
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        self.batch_norms_mut()
            .into_iter()
            .flat_map(|bn| [bn.running_mean.view_mut().into_dyn(), bn.running_var.view_mut().into_dyn()])
            .collect()
    }

    pub fn trainable_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    /// Trainable parameters plus BN running statistics.
    pub fn parameter_count(&self) -> usize {
        self.trainable_count() + self.buffers().iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameter counts per architectural row: stem dense, stem BN, all
    /// residual blocks together, output dense. Empty for other kinds.
    pub fn layer_counts(&self) -> Vec<(&'static str, usize)> {
        match &self.network {
            Network::Residual { stem, stem_bn, blocks, head } => vec![
                ("dense", stem.param_count()),
                ("batch_norm", stem_bn.param_count()),
                (
                    "residual_blocks",
                    blocks
                        .iter()
                        .map(|b| b.down.param_count() + b.bn.param_count() + b.up.param_count())
                        .sum(),
                ),
                ("output", head.param_count()),
            ],
            Network::Feedforward { hidden, head } => hidden
                .iter()
                .map(|l| ("dense", l.param_count()))
                .chain(std::iter::once(("output", head.param_count())))
                .collect(),
            Network::Logistic { linear } => vec![("output", linear.param_count())],
        }
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::Dimension(format!(
                "input width {} but model expects {}",
                x.ncols(),
                self.config.input_dim
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Dimension("empty batch".into()));
        }
        Ok(())
    }

    /// Class probabilities for each row.
    pub fn forward<R: Rng + ?Sized>(&mut self, x: ArrayView2<f64>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        match mode {
            Mode::Train => Ok(self.forward_train(x, rng)?.probs),
            Mode::Infer => self.predict_proba(x),
        }
    }

    /// Inference-mode probabilities. Rows are independent of each other.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let logits = match &self.network {
            Network::Residual { stem, stem_bn, blocks, head } => {
                let mut h = stem_bn.forward_infer(relu(stem.forward(x)).view());
                for b in blocks {
                    let n = b.bn.forward_infer(relu(b.down.forward(h.view())).view());
                    h = relu(b.up.forward(n.view()) + &h);
                }
                head.forward(h.view())
            }
            Network::Feedforward { hidden, head } => {
                let mut h = x.to_owned();
                for l in hidden {
                    h = relu(l.forward(h.view()));
                }
                head.forward(h.view())
            }
            Network::Logistic { linear } => return Ok(logistic_probs(linear.forward(x).view())),
        };
        Ok(softmax_rows(logits.view()))
    }

    /// Training-mode forward pass that records what backward needs.
    pub fn forward_train<R: Rng + ?Sized>(&mut self, x: ArrayView2<f64>, rng: &mut R) -> Result<Tape> {
        self.check_input(x)?;
        let rows = x.nrows();
        let cfg = &self.config;
        let (cache, probs) = match &mut self.network {
            Network::Residual { stem, stem_bn, blocks, head } => {
                let stem_pre = stem.forward(x);
                let (normed, stem_bn_cache) = stem_bn.forward_train(relu(stem_pre.clone()).view());
                let stem_mask = dropout_mask(rows, normed.ncols(), cfg.stem_dropout, rng);
                let mut h = apply_mask(normed, stem_mask.as_ref());

                let mut caches = Vec::with_capacity(blocks.len());
                for b in blocks.iter_mut() {
                    let down_pre = b.down.forward(h.view());
                    let (up_input, bn) = b.bn.forward_train(relu(down_pre.clone()).view());
                    let sum_pre = b.up.forward(up_input.view()) + &h;
                    let mask = dropout_mask(rows, sum_pre.ncols(), cfg.block_dropout, rng);
                    let out = apply_mask(relu(sum_pre.clone()), mask.as_ref());
                    caches.push(BlockCache { input: h, down_pre, bn, up_input, sum_pre, mask });
                    h = out;
                }
                let probs = softmax_rows(head.forward(h.view()).view());
                (
                    NetCache::Residual { stem_pre, stem_bn: stem_bn_cache, stem_mask, blocks: caches, head_input: h },
                    probs,
                )
            }
            Network::Feedforward { hidden, head } => {
                let mut h = x.to_owned();
                let mut caches = Vec::with_capacity(hidden.len());
                for l in hidden.iter() {
                    let pre = l.forward(h.view());
                    let mask = dropout_mask(rows, pre.ncols(), cfg.hidden_dropout, rng);
                    let out = apply_mask(relu(pre.clone()), mask.as_ref());
                    caches.push(HiddenCache { input: h, pre, mask });
                    h = out;
                }
                let probs = softmax_rows(head.forward(h.view()).view());
                (NetCache::Feedforward { hidden: caches, head_input: h }, probs)
            }
            Network::Logistic { linear } => (NetCache::Logistic, logistic_probs(linear.forward(x).view())),
        };
        Ok(Tape { input: x.to_owned(), cache, probs })
    }

    /// Loss and exact gradients of the smoothed weighted cross-entropy for
    /// the batch recorded in `tape`.
    pub fn backward(&self, tape: &Tape, labels: &[usize], weights: &[f64]) -> Result<(f64, Gradients)> {
        let s = self.config.label_smoothing;
        let probs = tape.probs.view();
        let loss = smoothed_weighted_loss(probs, labels, weights, s)?;
        let dlogits = loss_grad_logits(probs, labels, weights, s)?;

        let grads = match (&self.network, &tape.cache) {
            (
                Network::Residual { stem, stem_bn, blocks, head },
                NetCache::Residual { stem_pre, stem_bn: stem_bn_cache, stem_mask, blocks: caches, head_input },
            ) => {
                let (dh, head_w, head_b) = head.backward(head_input.view(), dlogits.view(), true);
                let mut dh = dh.expect("requested");
                let mut block_grads = Vec::with_capacity(blocks.len());
                for (b, c) in blocks.iter().zip(caches).rev() {
                    let dout = apply_mask(dh, c.mask.as_ref());
                    let dsum = relu_backward(c.sum_pre.view(), dout);
                    let (dn, up_w, up_b) = b.up.backward(c.up_input.view(), dsum.view(), true);
                    let (dr, bn_g, bn_b) = b.bn.backward(&c.bn, dn.expect("requested").view());
                    let dd = relu_backward(c.down_pre.view(), dr);
                    let (din, down_w, down_b) = b.down.backward(c.input.view(), dd.view(), true);
                    dh = din.expect("requested") + &dsum;
                    block_grads.push([down_w.into_dyn(), down_b.into_dyn(), bn_g.into_dyn(), bn_b.into_dyn(), up_w.into_dyn(), up_b.into_dyn()]);
                }
                block_grads.reverse();

                let dnormed = apply_mask(dh, stem_mask.as_ref());
                let (da, bn_g, bn_b) = stem_bn.backward(stem_bn_cache, dnormed.view());
                let dz = relu_backward(stem_pre.view(), da);
                let (_, stem_w, stem_b) = stem.backward(tape.input.view(), dz.view(), false);

                let mut g = vec![stem_w.into_dyn(), stem_b.into_dyn(), bn_g.into_dyn(), bn_b.into_dyn()];
                g.extend(block_grads.into_iter().flatten());
                g.push(head_w.into_dyn());
                g.push(head_b.into_dyn());
                g
            }
            (Network::Feedforward { hidden, head }, NetCache::Feedforward { hidden: caches, head_input }) => {
                let (dh, head_w, head_b) = head.backward(head_input.view(), dlogits.view(), !hidden.is_empty());
                let mut dh = dh;
                let mut layer_grads = Vec::with_capacity(hidden.len());
                for (i, (l, c)) in hidden.iter().zip(caches).enumerate().rev() {
                    let dout = apply_mask(dh.take().expect("requested"), c.mask.as_ref());
                    let dz = relu_backward(c.pre.view(), dout);
                    let (din, w, b) = l.backward(c.input.view(), dz.view(), i > 0);
                    dh = din;
                    layer_grads.push([w.into_dyn(), b.into_dyn()]);
                }
                layer_grads.reverse();
                let mut g: Vec<ArrayD<f64>> = layer_grads.into_iter().flatten().collect();
                g.push(head_w.into_dyn());
                g.push(head_b.into_dyn());
                g
            }
            (Network::Logistic { linear }, NetCache::Logistic) => {
                // With probabilities (σ(-z), σ(z)) the chain rule through both
                // outputs lands on the class-1 logit column.
                let dz = dlogits.column(1).to_owned().insert_axis(Axis(1));
                let (_, w, b) = linear.backward(tape.input.view(), dz.view(), false);
                vec![w.into_dyn(), b.into_dyn()]
            }
            _ => return Err(Error::Invariant("tape does not belong to this network".into())),
        };
        Ok((loss, Gradients(grads)))
    }
}

/// Argmax per row, ties resolved to the lowest class index.
pub fn argmax_rows(probs: ArrayView2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Inference-mode probabilities and argmax labels, evaluated in chunks.
pub fn predict(model: &Model, x: ArrayView2<f64>) -> Result<(Array2<f64>, Vec<usize>)> {
    const CHUNK: usize = 512;
    if x.nrows() == 0 {
        return Ok((Array2::zeros((0, model.config().num_classes)), Vec::new()));
    }
    let mut parts = Vec::new();
    for chunk in x.axis_chunks_iter(Axis(0), CHUNK) {
        parts.push(model.predict_proba(chunk)?);
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    let probs = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Invariant(e.to_string()))?;
    let labels = argmax_rows(probs.view());
    Ok((probs, labels))
}
