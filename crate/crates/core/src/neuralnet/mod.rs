//! Dense feedforward networks written from scratch.
//!
//! Samples are stored row-major and contiguous: a batch of `b` inputs of
//! width `d` is a `b * d` slice. Each layer computes
//! `out = act(in · Wᵀ + bias)` with `W` stored row-major as `out_dim × in_dim`.
//!
//! Parameters are addressed in a fixed flat order (layer by layer, weights
//! then biases) so that optimizers and gradient checks can treat a network
//! as one vector.

mod adam;
mod gradcheck;
mod linalg;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{gradient_check, max_relative_error, numeric_gradient, relative_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl LayerParams {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Shape(format!(
                "layer dimensions must be positive, got {out_dim}x{in_dim}"
            )));
        }
        if weights.len() != in_dim * out_dim || biases.len() != out_dim {
            return Err(Error::Shape(format!(
                "layer {out_dim}x{in_dim} needs {} weights and {out_dim} biases, got {} and {}",
                in_dim * out_dim,
                weights.len(),
                biases.len()
            )));
        }
        if !weights.iter().chain(&biases).all(|v| v.is_finite()) {
            return Err(Error::Shape("layer parameters must be finite".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Result<Self> {
        Self::new(
            in_dim,
            out_dim,
            vec![0.0; in_dim * out_dim],
            vec![0.0; out_dim],
            activation,
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn forward_into(&self, input: &[f64], batch: usize, out: &mut [f64]) {
        let (i, o) = (self.in_dim, self.out_dim);
        for row in out.chunks_exact_mut(o) {
            row.copy_from_slice(&self.biases);
        }
        // out(b×o) += input(b×i) · Wᵀ(i×o)
        linalg::gemm(
            (batch, i, o),
            (input, i, 1),
            (&self.weights, 1, i),
            (out, o, 1),
        );
        if self.activation != Activation::Linear {
            for v in out.iter_mut() {
                *v = self.activation.apply(*v);
            }
        }
    }
}

/// Stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerParams>,
}

/// Layer inputs/outputs recorded by a forward pass. `activations[0]` is the
/// network input and `activations[l + 1]` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

/// Loss derivatives with respect to the flat parameter vector and to the
/// network input (row-major, one row per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

impl Mlp {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].out_dim,
                    k + 1,
                    pair[1].in_dim
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with the given shape.
    pub fn zeros(layer_dims: &[usize], activations: &[Activation]) -> Result<Self> {
        check_shape_lists(layer_dims, activations)?;
        let layers = layer_dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| LayerParams::zeros(d[0], d[1], act))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(LayerParams::n_params).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Forward pass over `batch` samples stored row-major in `inputs`.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<ForwardCache> {
        if inputs.len() != batch * self.in_dim() {
            return Err(Error::Shape(format!(
                "expected {batch} inputs of width {}, got {} values",
                self.in_dim(),
                inputs.len()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_vec());
        for layer in &self.layers {
            let mut out = vec![0.0; batch * layer.out_dim];
            layer.forward_into(activations.last().unwrap(), batch, &mut out);
            activations.push(out);
        }
        Ok(ForwardCache { batch, activations })
    }

    /// Outputs only; row-major `batch × out_dim`.
    pub fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut cache = self.forward_batch(inputs, batch)?;
        Ok(cache.activations.pop().unwrap_or_default())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let cache = self.forward_batch(input, 1)?;
        Ok((cache.output().to_vec(), cache))
    }

    /// Reverse-mode derivatives given `output_grad = dL/d(output)` for every
    /// sample in the cached batch. Parameter gradients are summed over the
    /// batch; input gradients are per sample.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Gradients> {
        let batch = cache.batch;
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::Shape("cache does not belong to this network".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if cache.activations[l].len() != batch * layer.in_dim
                || cache.activations[l + 1].len() != batch * layer.out_dim
            {
                return Err(Error::Shape("cache does not belong to this network".into()));
            }
        }
        if output_grad.len() != batch * self.out_dim() {
            return Err(Error::Shape(format!(
                "expected {} output gradients, got {}",
                batch * self.out_dim(),
                output_grad.len()
            )));
        }

        let mut params = vec![0.0; self.n_params()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.n_params();
        }

        let mut upstream = output_grad.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (i, o) = (layer.in_dim, layer.out_dim);
            let input = &cache.activations[l];
            let output = &cache.activations[l + 1];

            // delta = upstream ⊙ act'(pre-activation)
            if layer.activation != Activation::Linear {
                for (g, &a) in upstream.iter_mut().zip(output) {
                    *g *= layer.activation.derivative_from_output(a);
                }
            }
            let delta = upstream;

            let (w_grad, b_grad) =
                params[offsets[l]..offsets[l] + layer.n_params()].split_at_mut(i * o);
            // dW(o×i) = deltaᵀ(o×b) · input(b×i)
            linalg::gemm((o, batch, i), (&delta, 1, o), (input, i, 1), (w_grad, i, 1));
            for row in delta.chunks_exact(o) {
                for (gb, &d) in b_grad.iter_mut().zip(row) {
                    *gb += d;
                }
            }

            // dInput(b×i) = delta(b×o) · W(o×i)
            let mut down = vec![0.0; batch * i];
            linalg::gemm(
                (batch, o, i),
                (&delta, o, 1),
                (&layer.weights, i, 1),
                (&mut down, i, 1),
            );
            upstream = down;
        }

        Ok(Gradients {
            params,
            input: upstream,
        })
    }
}

fn check_shape_lists(layer_dims: &[usize], activations: &[Activation]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least 2 layer dimensions, got {}",
            layer_dims.len()
        )));
    }
    if activations.len() != layer_dims.len() - 1 {
        return Err(Error::Shape(format!(
            "{} layers need {} activations, got {}",
            layer_dims.len() - 1,
            layer_dims.len() - 1,
            activations.len()
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Shape("layer dimensions must be positive".into()));
    }
    Ok(())
}

/// Glorot-uniform weights, zero biases, drawn from `rng`.
pub fn init_network_with_rng<R: Rng + ?Sized>(
    layer_dims: &[usize],
    activations: &[Activation],
    rng: &mut R,
) -> Result<Mlp> {
    check_shape_lists(layer_dims, activations)?;
    let mut layers = Vec::with_capacity(activations.len());
    for (d, &act) in layer_dims.windows(2).zip(activations) {
        let (i, o) = (d[0], d[1]);
        let limit = (6.0 / (i + o) as f64).sqrt();
        let dist = Uniform::new(-limit, limit);
        let weights = (0..i * o).map(|_| dist.sample(rng)).collect();
        layers.push(LayerParams::new(i, o, weights, vec![0.0; o], act)?);
    }
    Mlp::new(layers)
}

pub fn init_network(layer_dims: &[usize], activations: &[Activation], seed: u64) -> Result<Mlp> {
    init_network_with_rng(
        layer_dims,
        activations,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// `dL/dpred` of [`mse_loss`].
pub fn mse_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let scale = 2.0 / pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| scale * (p - t))
        .collect())
}

/// On-disk form of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpDocument {
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&Mlp> for MlpDocument {
    fn from(net: &Mlp) -> Self {
        Self {
            layer_dims: net.layer_dims(),
            activations: net.activations(),
            weights: net.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: net.layers.iter().map(|l| l.biases.clone()).collect(),
        }
    }
}

impl TryFrom<MlpDocument> for Mlp {
    type Error = Error;

    fn try_from(doc: MlpDocument) -> Result<Self> {
        check_shape_lists(&doc.layer_dims, &doc.activations)?;
        let n = doc.activations.len();
        if doc.weights.len() != n || doc.biases.len() != n {
            return Err(Error::Shape(format!(
                "{n} layers declared but {} weight and {} bias blocks present",
                doc.weights.len(),
                doc.biases.len()
            )));
        }
        let layers = doc
            .layer_dims
            .windows(2)
            .zip(doc.activations)
            .zip(doc.weights.into_iter().zip(doc.biases))
            .map(|((d, act), (w, b))| LayerParams::new(d[0], d[1], w, b, act))
            .collect::<Result<Vec<_>>>()?;
        Mlp::new(layers)
    }
}
