//! MLP encoder with L2-normalized output, hand-written backpropagation and
//! the momentum (EMA) key encoder.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, EqcoError, Result};
use crate::math::{dot, norm, SeededRng};

pub const DEFAULT_BETA: f64 = 0.999;

/// A dense layer, weight stored row-major as `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }
}

/// Layers of an MLP with ReLU between consecutive layers and none after the
/// last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.dims() == other.dims()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Every parameter, layer by layer, weight before bias.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn scale(&mut self, c: f64) {
        self.iter_mut().for_each(|p| *p *= c);
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &MlpParams, c: f64) {
        for (p, o) in self.iter_mut().zip(other.iter()) {
            *p += c * o;
        }
    }

    /// Euclidean distance between two parameter sets of the same shape.
    pub fn distance(&self, other: &MlpParams) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|p| p.is_finite())
    }

    pub fn to_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            layer_dims: self.dims(),
            layers: self.layers.clone(),
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(EqcoError::Config(format!(
                "unknown checkpoint format {:?}",
                ckpt.format
            )));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(EqcoError::Config(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        let params = MlpParams {
            layers: ckpt.layers,
        };
        params.validate()?;
        if params.dims() != ckpt.layer_dims {
            return Err(EqcoError::Config(
                "checkpoint layer_dims disagree with layers".into(),
            ));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(EqcoError::Config("an MLP needs at least one layer".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weight.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(EqcoError::Config(format!(
                    "layer {i} has inconsistent sizes"
                )));
            }
            if i > 0 && self.layers[i - 1].out_dim != l.in_dim {
                return Err(EqcoError::Config(format!("layer {i} does not chain")));
            }
        }
        if !self.is_finite() {
            return Err(EqcoError::Numeric("non-finite parameter".into()));
        }
        Ok(())
    }
}

const CHECKPOINT_FORMAT: &str = "eqco-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// He initialization: weights `N(0, 2/fan_in)`, zero biases.
pub fn init_params(rng: &mut SeededRng, layer_dims: &[usize]) -> Result<MlpParams> {
    if layer_dims.len() < 2 {
        return precondition("an MLP needs at least an input and an output width");
    }
    if layer_dims.contains(&0) {
        return precondition("layer widths must be positive");
    }
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / fan_in as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out);
            layer
                .weight
                .iter_mut()
                .for_each(|p| *p = std * rng.standard_normal());
            layer
        })
        .collect();
    Ok(MlpParams { layers })
}

/// Activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (post-ReLU output of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer; the last one is the raw output `z`.
    pre: Vec<Vec<f64>>,
    z_norm: f64,
    embedding: Vec<f64>,
}

impl ForwardCache {
    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    /// `z` before normalization.
    pub fn raw_output(&self) -> &[f64] {
        self.pre.last().expect("non-empty network")
    }
}

/// `l2_normalize(MLP(x))` together with the forward cache.
pub fn encode(params: &MlpParams, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if x.len() != params.input_dim() {
        return domain(format!(
            "input has dimension {}, network expects {}",
            x.len(),
            params.input_dim()
        ));
    }
    let n_layers = params.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers);
    let mut h = x.to_vec();
    for (i, layer) in params.layers.iter().enumerate() {
        let a = layer.apply(&h);
        inputs.push(std::mem::take(&mut h));
        if i + 1 < n_layers {
            h = a.iter().map(|v| v.max(0.0)).collect();
        }
        pre.push(a);
    }
    let z = pre.last().expect("non-empty network");
    let z_norm = norm(z);
    if !z_norm.is_finite() {
        return Err(EqcoError::Numeric("encoder output is not finite".into()));
    }
    if z_norm == 0.0 {
        return Err(EqcoError::Numeric(
            "encoder output is the zero vector".into(),
        ));
    }
    let embedding: Vec<f64> = z.iter().map(|v| v / z_norm).collect();
    Ok((
        embedding.clone(),
        ForwardCache {
            inputs,
            pre,
            z_norm,
            embedding,
        },
    ))
}

/// Backpropagates `d_embedding` and accumulates parameter gradients into
/// `grads`. Returns the gradient with respect to the input.
pub fn encode_backward_into(
    params: &MlpParams,
    cache: &ForwardCache,
    d_embedding: &[f64],
    grads: &mut MlpParams,
) -> Result<Vec<f64>> {
    if d_embedding.len() != params.output_dim()
        || cache.pre.len() != params.layers.len()
        || !grads.same_shape(params)
    {
        return domain("shape mismatch in encode_backward");
    }
    // Jacobian of z ↦ z/‖z‖ is (I - e eᵀ)/‖z‖.
    let e = &cache.embedding;
    let proj = dot(e, d_embedding);
    let mut delta: Vec<f64> = d_embedding
        .iter()
        .zip(e)
        .map(|(g, ei)| (g - ei * proj) / cache.z_norm)
        .collect();

    for li in (0..params.layers.len()).rev() {
        let layer = &params.layers[li];
        let input = &cache.inputs[li];
        let g = &mut grads.layers[li];
        let mut d_input = vec![0.0; layer.in_dim];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = o * layer.in_dim;
            let w_row = &layer.weight[row..row + layer.in_dim];
            let g_row = &mut g.weight[row..row + layer.in_dim];
            for ((gw, &xi), (di, &w)) in g_row
                .iter_mut()
                .zip(input)
                .zip(d_input.iter_mut().zip(w_row))
            {
                *gw += d * xi;
                *di += d * w;
            }
        }
        if li > 0 {
            // ReLU gate of the previous layer.
            for (di, &a) in d_input.iter_mut().zip(&cache.pre[li - 1]) {
                if a <= 0.0 {
                    *di = 0.0;
                }
            }
        }
        delta = d_input;
    }
    Ok(delta)
}

/// Parameter gradients and input gradient for `d_embedding`.
pub fn encode_backward(
    params: &MlpParams,
    cache: &ForwardCache,
    d_embedding: &[f64],
) -> Result<(MlpParams, Vec<f64>)> {
    let mut grads = params.zeros_like();
    let d_input = encode_backward_into(params, cache, d_embedding, &mut grads)?;
    Ok((grads, d_input))
}

/// Key encoder parameters updated as an exponential moving average of the
/// query encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumEncoder {
    pub params: MlpParams,
    pub beta: f64,
}

impl MomentumEncoder {
    pub fn new(params: MlpParams, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return domain(format!("momentum beta must lie in [0, 1], got {beta}"));
        }
        Ok(MomentumEncoder { params, beta })
    }
}

/// `θ_k ← β θ_k + (1 - β) θ_q`.
pub fn momentum_update(target: &mut MomentumEncoder, source: &MlpParams) -> Result<()> {
    if !target.params.same_shape(source) {
        return domain("momentum update between differently shaped networks");
    }
    let beta = target.beta;
    for (pk, pq) in target.params.iter_mut().zip(source.iter()) {
        *pk = beta * *pk + (1.0 - beta) * pq;
    }
    Ok(())
}
