//! Multilayer perceptron `d → 128 → 64 → 2` with ReLU hidden layers,
//! inverted dropout after each hidden layer and a softmax output, trained
//! on sparse categorical cross-entropy with Adam.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{rng, Error, Matrix, Result};

pub const HIDDEN1: usize = 128;
pub const HIDDEN2: usize = 64;
pub const OUTPUTS: usize = 2;

/// Smallest probability fed to `ln` in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// Weights are `fan_in × fan_out`, so a layer computes `X·W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: Vec<f64>,
}

impl NetParams {
    /// Standard architecture with Glorot-uniform weights and zero biases.
    pub fn init(d: usize, seed: u64) -> Result<Self> {
        Self::init_with_hidden(d, HIDDEN1, HIDDEN2, seed)
    }

    /// Non-standard hidden widths. Models built this way fail
    /// `check_architecture(false)`.
    pub fn init_with_hidden(d: usize, h1: usize, h2: usize, seed: u64) -> Result<Self> {
        if d == 0 || h1 == 0 || h2 == 0 {
            return Err(Error::InvalidParameter("layer widths must be >= 1".into()));
        }
        let mut rng = rng::from_seed(seed);
        let mut glorot = |fan_in: usize, fan_out: usize| {
            let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
            let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect();
            Matrix::from_vec(fan_in, fan_out, data).expect("sized above")
        };
        Ok(Self {
            w1: glorot(d, h1),
            b1: vec![0.0; h1],
            w2: glorot(h1, h2),
            b2: vec![0.0; h2],
            w3: glorot(h2, OUTPUTS),
            b3: vec![0.0; OUTPUTS],
        })
    }

    pub fn zeros(d: usize) -> Self {
        Self::zeros_with_hidden(d, HIDDEN1, HIDDEN2)
    }

    pub fn zeros_with_hidden(d: usize, h1: usize, h2: usize) -> Self {
        Self {
            w1: Matrix::zeros(d, h1),
            b1: vec![0.0; h1],
            w2: Matrix::zeros(h1, h2),
            b2: vec![0.0; h2],
            w3: Matrix::zeros(h2, OUTPUTS),
            b3: vec![0.0; OUTPUTS],
        }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self::zeros_with_hidden(self.input_dim(), self.w1.cols(), self.w2.cols())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    /// Checks the layer shapes chain together and all entries are finite.
    /// Unless `allow_custom`, the hidden widths must be 128 and 64.
    pub fn check_architecture(&self, allow_custom: bool) -> Result<()> {
        let (h1, h2) = (self.w1.cols(), self.w2.cols());
        let chained = self.b1.len() == h1
            && self.w2.rows() == h1
            && self.b2.len() == h2
            && self.w3.rows() == h2
            && self.w3.cols() == OUTPUTS
            && self.b3.len() == OUTPUTS
            && self.input_dim() > 0;
        if !chained {
            return Err(Error::CorruptModel("layer shapes do not chain".into()));
        }
        if !allow_custom && (h1, h2) != (HIDDEN1, HIDDEN2) {
            return Err(Error::CorruptModel(format!(
                "hidden widths {h1}/{h2}, expected {HIDDEN1}/{HIDDEN2}"
            )));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::CorruptModel("non-finite network parameter".into()));
        }
        Ok(())
    }

    /// `[w1, b1, w2, b2, w3, b3]`, weights flattened row-major.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
            self.w3.as_slice(),
            &self.b3,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
            self.w3.as_mut_slice(),
            &mut self.b3,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// `X·W + b`, with `b` broadcast over rows.
pub fn dense_forward(w: &Matrix, b: &[f64], x: &Matrix) -> Result<Matrix> {
    if b.len() != w.cols() {
        return Err(Error::DimensionMismatch {
            expected: w.cols(),
            found: b.len(),
        });
    }
    let mut out = x.matmul(w)?;
    for i in 0..out.rows() {
        for (o, bias) in out.row_mut(i).iter_mut().zip(b) {
            *o += bias;
        }
    }
    Ok(out)
}

pub fn relu(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v = v.max(0.0);
    }
    out
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dropout rate {rate} outside [0, 1)")))
    }
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut rng::Rng) -> Result<Matrix> {
    check_rate(rate)?;
    let keep = 1.0 / (1.0 - rate);
    let data = (0..rows * cols)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    Matrix::from_vec(rows, cols, data)
}

/// Identity in eval mode; inverted dropout in train mode.
pub fn dropout(x: &Matrix, rate: f64, mode: Mode, rng: &mut rng::Rng) -> Result<Matrix> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask(x.rows(), x.cols(), rate, rng)?;
    Ok(hadamard(x, &mask))
}

fn hadamard(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    for (o, m) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *o *= m;
    }
    out
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = exp(*v - max);
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Mean of `−ln(max(p[i][label_i], 1e−12))` over the batch.
pub fn sparse_ce_loss(probs: &Matrix, labels: &[u8]) -> Result<f64> {
    if labels.len() != probs.rows() {
        return Err(Error::DimensionMismatch {
            expected: probs.rows(),
            found: labels.len(),
        });
    }
    if probs.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let l = usize::from(l);
        if l >= probs.cols() {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: probs.cols(),
            });
        }
        total -= log(probs[(i, l)].clamp(PROB_FLOOR, 1.0));
    }
    Ok(total / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub hidden1: Matrix,
    pub hidden2: Matrix,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Matrix,
    pub z1: Matrix,
    pub a1: Matrix,
    pub z2: Matrix,
    pub a2: Matrix,
    pub probs: Matrix,
    pub masks: Option<DropoutMasks>,
}

/// Forward pass. With `masks` the hidden activations are multiplied by the
/// given dropout multipliers; without, dropout is off.
pub fn forward(params: &NetParams, x: &Matrix, masks: Option<DropoutMasks>) -> Result<ForwardCache> {
    if x.cols() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            found: x.cols(),
        });
    }
    let z1 = dense_forward(&params.w1, &params.b1, x)?;
    let mut a1 = relu(&z1);
    if let Some(m) = &masks {
        a1 = hadamard(&a1, &m.hidden1);
    }
    let z2 = dense_forward(&params.w2, &params.b2, &a1)?;
    let mut a2 = relu(&z2);
    if let Some(m) = &masks {
        a2 = hadamard(&a2, &m.hidden2);
    }
    let logits = dense_forward(&params.w3, &params.b3, &a2)?;
    Ok(ForwardCache {
        input: x.clone(),
        z1,
        a1,
        z2,
        a2,
        probs: softmax(&logits),
        masks,
    })
}

/// `aᵀ·g` and the column sums of `g`: weight and bias gradients of a
/// dense layer with input `a` and output gradient `g`.
fn dense_grads(a: &Matrix, g: &Matrix) -> (Matrix, Vec<f64>) {
    let gw = a.transpose().matmul(g).expect("batch sizes agree");
    let mut gb = vec![0.0; g.cols()];
    for row in g.iter_rows() {
        for (s, v) in gb.iter_mut().zip(row) {
            *s += v;
        }
    }
    (gw, gb)
}

/// Gradient through `relu` and an optional dropout mask.
fn hidden_grad(upstream: &Matrix, z: &Matrix, mask: Option<&Matrix>) -> Matrix {
    let mut out = upstream.clone();
    for (k, g) in out.as_mut_slice().iter_mut().enumerate() {
        let m = mask.map_or(1.0, |m| m.as_slice()[k]);
        *g = if z.as_slice()[k] > 0.0 { *g * m } else { 0.0 };
    }
    out
}

/// Exact gradients of the mean cross-entropy of `cache` with respect to
/// every parameter. The output layer uses the fused softmax/cross-entropy
/// gradient `(probs − one_hot)/batch`.
pub fn backward(params: &NetParams, cache: &ForwardCache, labels: &[u8]) -> Result<NetParams> {
    let batch = cache.probs.rows();
    if labels.len() != batch {
        return Err(Error::DimensionMismatch {
            expected: batch,
            found: labels.len(),
        });
    }
    let mut dlogits = cache.probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        let l = usize::from(l);
        if l >= OUTPUTS {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: OUTPUTS,
            });
        }
        dlogits[(i, l)] -= 1.0;
    }
    for v in dlogits.as_mut_slice() {
        *v /= batch as f64;
    }
    let (w3, b3) = dense_grads(&cache.a2, &dlogits);
    let da2 = dlogits.matmul(&params.w3.transpose())?;
    let dz2 = hidden_grad(&da2, &cache.z2, cache.masks.as_ref().map(|m| &m.hidden2));
    let (w2, b2) = dense_grads(&cache.a1, &dz2);
    let da1 = dz2.matmul(&params.w2.transpose())?;
    let dz1 = hidden_grad(&da1, &cache.z1, cache.masks.as_ref().map(|m| &m.hidden1));
    let (w1, b1) = dense_grads(&cache.input, &dz1);
    Ok(NetParams { w1, b1, w2, b2, w3, b3 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            dropout_rate: 0.2,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        check_rate(self.dropout_rate)?;
        if !(self.lr > 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be > 0", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("Adam betas must be in [0, 1) and eps > 0".into()));
        }
        Ok(())
    }
}

/// Adam moments, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: NetParams,
    pub v: NetParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &NetParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `theta` at step `t` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let c1 = 1.0 - libm::pow(beta1, t as f64);
    let c2 = 1.0 - libm::pow(beta2, t as f64);
    for k in 0..theta.len() {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        let m_hat = m[k] / c1;
        let v_hat = v[k] / c2;
        theta[k] -= lr * m_hat / (sqrt(v_hat) + eps);
    }
}

/// Advances `state.t` and applies [`adam_update`] to every tensor.
pub fn adam_step(params: &mut NetParams, grads: &NetParams, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    let shapes_agree = params
        .tensors()
        .iter()
        .zip(grads.tensors())
        .zip(state.m.tensors())
        .zip(state.v.tensors())
        .all(|(((p, g), m), v)| p.len() == g.len() && p.len() == m.len() && p.len() == v.len());
    if !shapes_agree {
        return Err(Error::DimensionMismatch {
            expected: params.param_count(),
            found: grads.param_count(),
        });
    }
    state.t += 1;
    let t = state.t;
    let AdamState { m, v, .. } = state;
    for (((theta, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut())
        .zip(v.tensors_mut())
    {
        adam_update(theta, g, m, v, t, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    }
    Ok(())
}

/// Seeded mini-batch training. Returns the trained parameters and the
/// mean training loss of each epoch.
pub fn train_mlp(ds: &Dataset, cfg: &TrainConfig) -> Result<(NetParams, Vec<f64>)> {
    cfg.validate()?;
    let mut params = NetParams::init(ds.d(), rng::derive_seed(cfg.seed, 0))?;
    train_from(&mut params, ds, cfg).map(|history| (params, history))
}

/// Continues training `params` in place; see [`train_mlp`].
pub fn train_from(params: &mut NetParams, ds: &Dataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if params.input_dim() != ds.d() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            found: ds.d(),
        });
    }
    let mut order_rng = rng::from_seed(rng::derive_seed(cfg.seed, 1));
    let mut dropout_rng = rng::from_seed(rng::derive_seed(cfg.seed, 2));
    let mut state = AdamState::new(params);
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let (h1, h2) = (params.w1.cols(), params.w2.cols());

    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x = ds.features().select_rows(batch);
            let labels: Vec<u8> = batch.iter().map(|&i| ds.labels()[i]).collect();
            let masks = if cfg.dropout_rate > 0.0 {
                Some(DropoutMasks {
                    hidden1: dropout_mask(batch.len(), h1, cfg.dropout_rate, &mut dropout_rng)?,
                    hidden2: dropout_mask(batch.len(), h2, cfg.dropout_rate, &mut dropout_rng)?,
                })
            } else {
                None
            };
            let cache = forward(params, &x, masks)?;
            epoch_loss += sparse_ce_loss(&cache.probs, &labels)? * batch.len() as f64;
            let grads = backward(params, &cache, &labels)?;
            adam_step(params, &grads, &mut state, cfg)?;
        }
        history.push(epoch_loss / ds.n() as f64);
    }
    Ok(history)
}

/// Eval-mode classes (argmax, ties to class 0) and softmax probabilities.
pub fn predict_mlp(params: &NetParams, x: &Matrix) -> Result<(Vec<u8>, Matrix)> {
    let probs = forward(params, x, None)?.probs;
    let classes = probs.iter_rows().map(|p| u8::from(p[1] > p[0])).collect();
    Ok((classes, probs))
}
