//! The full classifier: LSTM -> time-distributed dense -> average pooling
//! -> softmax, with its backward pass.

use serde::{Deserialize, Serialize};

use super::layers::{self, dense_forward_full, DenseParams, SoftmaxParams};
use super::lstm::{lstm_backward, lstm_forward, LstmParams, LstmStepCache};
use crate::dataio::SegmentedExample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{rng_from_seed, uniform_in, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input_size: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lstm: LstmParams,
    pub dense: DenseParams,
    pub softmax: SoftmaxParams,
}

/// Number of parameter tensors in a model.
pub const NUM_TENSORS: usize = 19;

pub const TENSOR_NAMES: [&str; NUM_TENSORS] = [
    "lstm.w_z", "lstm.w_i", "lstm.w_f", "lstm.w_o", "lstm.r_z", "lstm.r_i", "lstm.r_f", "lstm.r_o", "lstm.p_i",
    "lstm.p_f", "lstm.p_o", "lstm.b_z", "lstm.b_i", "lstm.b_f", "lstm.b_o", "dense.w", "dense.b", "softmax.theta",
    "softmax.bias",
];

fn glorot(rng: &mut Rng, m: &mut Matrix) {
    let r = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
    m.as_mut_slice().iter_mut().for_each(|v| *v = uniform_in(rng, -r, r));
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            lstm: LstmParams::zeros(dims.lstm_units, dims.input_size),
            dense: DenseParams::zeros(dims.dense_units, dims.lstm_units),
            softmax: SoftmaxParams::zeros(dims.classes, dims.dense_units),
        }
    }

    /// Glorot-uniform weights, zero biases and peepholes, forget bias +1.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        let mut rng = rng_from_seed(seed);
        let l = &mut p.lstm;
        for m in [
            &mut l.w_z, &mut l.w_i, &mut l.w_f, &mut l.w_o, &mut l.r_z, &mut l.r_i, &mut l.r_f, &mut l.r_o,
        ] {
            glorot(&mut rng, m);
        }
        l.b_f.fill(1.0);
        glorot(&mut rng, &mut p.dense.w);
        glorot(&mut rng, &mut p.softmax.theta);
        p
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input_size: self.lstm.input_size(),
            lstm_units: self.lstm.units(),
            dense_units: self.dense.units(),
            classes: self.softmax.classes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lstm.validate()?;
        self.dense.validate()?;
        self.softmax.validate()?;
        if self.dense.w.cols() != self.lstm.units() || self.softmax.theta.cols() != self.dense.units() {
            return Err(Error::shape("layer widths do not chain"));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Consistency("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Every tensor as a flat slice, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; NUM_TENSORS] {
        let l = &self.lstm;
        [
            l.w_z.as_slice(),
            l.w_i.as_slice(),
            l.w_f.as_slice(),
            l.w_o.as_slice(),
            l.r_z.as_slice(),
            l.r_i.as_slice(),
            l.r_f.as_slice(),
            l.r_o.as_slice(),
            &l.p_i,
            &l.p_f,
            &l.p_o,
            &l.b_z,
            &l.b_i,
            &l.b_f,
            &l.b_o,
            self.dense.w.as_slice(),
            &self.dense.b,
            self.softmax.theta.as_slice(),
            &self.softmax.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; NUM_TENSORS] {
        let l = &mut self.lstm;
        [
            l.w_z.as_mut_slice(),
            l.w_i.as_mut_slice(),
            l.w_f.as_mut_slice(),
            l.w_o.as_mut_slice(),
            l.r_z.as_mut_slice(),
            l.r_i.as_mut_slice(),
            l.r_f.as_mut_slice(),
            l.r_o.as_mut_slice(),
            &mut l.p_i,
            &mut l.p_f,
            &mut l.p_o,
            &mut l.b_z,
            &mut l.b_i,
            &mut l.b_f,
            &mut l.b_o,
            self.dense.w.as_mut_slice(),
            &mut self.dense.b,
            self.softmax.theta.as_mut_slice(),
            &mut self.softmax.bias,
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors().iter())
            .all(|(a, b)| a.len() == b.len())
            && self.dims() == other.dims()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            crate::matrix::axpy(alpha, src, dst);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub steps: Vec<LstmStepCache>,
    pub lstm_outputs: Matrix,
    pub dense_pre: Matrix,
    pub dense_out: Matrix,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
    pub posterior: Vec<f64>,
}

impl ForwardTrace {
    pub fn loss(&self, label: usize) -> f64 {
        layers::nll_from_logits(&self.logits, label)
    }
}

pub fn model_forward(params: &ModelParams, example: &SegmentedExample) -> Result<ForwardTrace> {
    forward_segments(params, &example.segments)
}

pub fn forward_segments(params: &ModelParams, segments: &Matrix) -> Result<ForwardTrace> {
    if segments.rows() == 0 {
        return Err(Error::argument("example has no timesteps"));
    }
    let lstm = lstm_forward(&params.lstm, segments)?;
    let (dense_pre, dense_out) = dense_forward_full(&params.dense, &lstm.outputs)?;
    let pooled = layers::average_pool(&dense_out)?;
    let logits = layers::logits(&params.softmax, &pooled)?;
    let posterior = layers::softmax(&logits);
    Ok(ForwardTrace {
        steps: lstm.steps,
        lstm_outputs: lstm.outputs,
        dense_pre,
        dense_out,
        pooled,
        logits,
        posterior,
    })
}

/// Gradient of `-ln P(label)` with respect to every parameter.
pub fn model_backward(params: &ModelParams, trace: &ForwardTrace, label: usize) -> Result<ModelParams> {
    let dims = params.dims();
    let m = trace.steps.len();
    if trace.posterior.len() != dims.classes
        || trace.pooled.len() != dims.dense_units
        || trace.dense_out.shape() != (m, dims.dense_units)
        || trace.lstm_outputs.shape() != (m, dims.lstm_units)
        || trace.steps.iter().any(|s| s.x.len() != dims.input_size || s.c.len() != dims.lstm_units)
    {
        return Err(Error::Consistency("forward trace does not belong to these parameters".into()));
    }
    if label >= dims.classes {
        return Err(Error::argument(format!("label {label} out of range for {} classes", dims.classes)));
    }
    let mut grads = ModelParams::zeros(dims);

    let mut d_logits = trace.posterior.clone();
    d_logits[label] -= 1.0;
    grads.softmax.theta.add_outer(&d_logits, &trace.pooled);
    grads.softmax.bias.copy_from_slice(&d_logits);
    let mut d_pooled = vec![0.0; dims.dense_units];
    params.softmax.theta.mul_t_vec_acc(&d_logits, &mut d_pooled);

    let inv_m = 1.0 / m as f64;
    let mut d_lstm_out = Matrix::zeros(m, dims.lstm_units);
    let mut d_pre = vec![0.0; dims.dense_units];
    for t in 0..m {
        for (k, d) in d_pre.iter_mut().enumerate() {
            let v = trace.dense_out[(t, k)];
            *d = d_pooled[k] * inv_m * (1.0 - v * v);
        }
        grads.dense.w.add_outer(&d_pre, trace.lstm_outputs.row(t));
        crate::matrix::axpy(1.0, &d_pre, &mut grads.dense.b);
        params.dense.w.mul_t_vec_acc(&d_pre, d_lstm_out.row_mut(t));
    }

    lstm_backward(&params.lstm, &trace.steps, &d_lstm_out, &mut grads.lstm);
    Ok(grads)
}

/// Loss and gradient for one example.
pub fn loss_and_gradient(params: &ModelParams, example: &SegmentedExample) -> Result<(f64, ModelParams, Vec<f64>)> {
    let trace = model_forward(params, example)?;
    let grads = model_backward(params, &trace, example.label)?;
    Ok((trace.loss(example.label), grads, trace.posterior))
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(posterior: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in posterior.iter().enumerate().skip(1) {
        if p > posterior[best] {
            best = k;
        }
    }
    best
}

pub fn predict(params: &ModelParams, example: &SegmentedExample) -> Result<usize> {
    Ok(argmax(&model_forward(params, example)?.posterior))
}
