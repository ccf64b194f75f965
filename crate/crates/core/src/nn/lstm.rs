//! Peephole LSTM layer.
//!
//! Per timestep, with `y^{t-1}` the previous block output:
//!
//! ```text
//! z = tanh(Wz x + Rz y + bz)                 block input
//! i = sigmoid(Wi x + Ri y + Pi . c_prev + bi)  input gate
//! f = sigmoid(Wf x + Rf y + Pf . c_prev + bf)  forget gate
//! c = z . i + c_prev . f                     cell
//! o = sigmoid(Wo x + Ro y + Po . c + bo)       output gate (reads the new cell)
//! u = tanh(c) . o                            block output, fed back as y
//! ```

use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// Input weights, `units x input_size`.
    pub w_z: Matrix,
    pub w_i: Matrix,
    pub w_f: Matrix,
    pub w_o: Matrix,
    /// Recurrent weights, `units x units`.
    pub r_z: Matrix,
    pub r_i: Matrix,
    pub r_f: Matrix,
    pub r_o: Matrix,
    /// Peephole weights.
    pub p_i: Vec<f64>,
    pub p_f: Vec<f64>,
    pub p_o: Vec<f64>,
    pub b_z: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(units: usize, input_size: usize) -> Self {
        let w = || Matrix::zeros(units, input_size);
        let r = || Matrix::zeros(units, units);
        let v = || vec![0.0; units];
        Self {
            w_z: w(),
            w_i: w(),
            w_f: w(),
            w_o: w(),
            r_z: r(),
            r_i: r(),
            r_f: r(),
            r_o: r(),
            p_i: v(),
            p_f: v(),
            p_o: v(),
            b_z: v(),
            b_i: v(),
            b_f: v(),
            b_o: v(),
        }
    }

    pub fn units(&self) -> usize {
        self.b_z.len()
    }

    pub fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (b, l) = (self.units(), self.input_size());
        let inputs_ok = [&self.w_z, &self.w_i, &self.w_f, &self.w_o]
            .iter()
            .all(|m| m.shape() == (b, l));
        let recurrent_ok = [&self.r_z, &self.r_i, &self.r_f, &self.r_o]
            .iter()
            .all(|m| m.shape() == (b, b));
        let vectors_ok = [&self.p_i, &self.p_f, &self.p_o, &self.b_z, &self.b_i, &self.b_f, &self.b_o]
            .iter()
            .all(|v| v.len() == b);
        if !(inputs_ok && recurrent_ok && vectors_ok) {
            return Err(Error::shape(format!("LSTM parameters inconsistent with {b} units, input {l}")));
        }
        Ok(())
    }
}

/// Everything one timestep computed, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub z: Vec<f64>,
    pub i_bar: Vec<f64>,
    pub i: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub f: Vec<f64>,
    pub c: Vec<f64>,
    pub o_bar: Vec<f64>,
    pub o: Vec<f64>,
    pub u: Vec<f64>,
}

fn affine(w: &Matrix, x: &[f64], r: &Matrix, y_prev: &[f64], bias: &[f64]) -> Vec<f64> {
    let mut out = bias.to_vec();
    w.mul_vec_acc(x, &mut out);
    r.mul_vec_acc(y_prev, &mut out);
    out
}

/// One timestep. `u` and `c` of the result are the new output and cell state.
pub fn lstm_step(params: &LstmParams, x: &[f64], y_prev: &[f64], c_prev: &[f64]) -> Result<LstmStepCache> {
    params.validate()?;
    let b = params.units();
    if x.len() != params.input_size() || y_prev.len() != b || c_prev.len() != b {
        return Err(Error::shape(format!(
            "step inputs x={}, y={}, c={} do not fit {} units with input {}",
            x.len(),
            y_prev.len(),
            c_prev.len(),
            b,
            params.input_size()
        )));
    }
    Ok(step(params, x, y_prev, c_prev))
}

pub(crate) fn step(p: &LstmParams, x: &[f64], y_prev: &[f64], c_prev: &[f64]) -> LstmStepCache {
    let z_bar = affine(&p.w_z, x, &p.r_z, y_prev, &p.b_z);
    let mut i_bar = affine(&p.w_i, x, &p.r_i, y_prev, &p.b_i);
    let mut f_bar = affine(&p.w_f, x, &p.r_f, y_prev, &p.b_f);
    for k in 0..i_bar.len() {
        i_bar[k] += p.p_i[k] * c_prev[k];
        f_bar[k] += p.p_f[k] * c_prev[k];
    }
    let z: Vec<f64> = z_bar.iter().map(|v| v.tanh()).collect();
    let i: Vec<f64> = i_bar.iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = f_bar.iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = (0..z.len()).map(|k| z[k] * i[k] + c_prev[k] * f[k]).collect();
    let mut o_bar = affine(&p.w_o, x, &p.r_o, y_prev, &p.b_o);
    for k in 0..o_bar.len() {
        o_bar[k] += p.p_o[k] * c[k];
    }
    let o: Vec<f64> = o_bar.iter().map(|&v| sigmoid(v)).collect();
    let u = c.iter().zip(&o).map(|(c, o)| c.tanh() * o).collect();
    LstmStepCache {
        x: x.to_vec(),
        z_bar,
        z,
        i_bar,
        i,
        f_bar,
        f,
        c,
        o_bar,
        o,
        u,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmForward {
    /// `M x units`; row `t` is `u^t`.
    pub outputs: Matrix,
    pub steps: Vec<LstmStepCache>,
}

/// Runs the layer over the rows of `segments` from a zero initial state.
pub fn lstm_forward(params: &LstmParams, segments: &Matrix) -> Result<LstmForward> {
    params.validate()?;
    if segments.cols() != params.input_size() {
        return Err(Error::shape(format!(
            "segments have length {}, LSTM expects {}",
            segments.cols(),
            params.input_size()
        )));
    }
    let b = params.units();
    let zeros = vec![0.0; b];
    let mut steps: Vec<LstmStepCache> = Vec::with_capacity(segments.rows());
    let mut outputs = Matrix::zeros(segments.rows(), b);
    for t in 0..segments.rows() {
        let cache = match steps.last() {
            Some(prev) => step(params, segments.row(t), &prev.u, &prev.c),
            None => step(params, segments.row(t), &zeros, &zeros),
        };
        outputs.row_mut(t).copy_from_slice(&cache.u);
        steps.push(cache);
    }
    Ok(LstmForward { outputs, steps })
}

/// Backpropagation through time. `d_outputs[t]` is dJ/du^t from the layers
/// above; gradients are accumulated into `grads`.
pub(crate) fn lstm_backward(p: &LstmParams, steps: &[LstmStepCache], d_outputs: &Matrix, grads: &mut LstmParams) {
    let b = p.units();
    let zeros = vec![0.0; b];
    // dJ/dy^t and dJ/dc^t arriving from timestep t + 1
    let mut dy_next = vec![0.0; b];
    let mut dc_next = vec![0.0; b];
    let mut d_z = vec![0.0; b];
    let mut d_i = vec![0.0; b];
    let mut d_f = vec![0.0; b];
    let mut d_o = vec![0.0; b];

    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        let (c_prev, y_prev) = if t > 0 {
            (&steps[t - 1].c, &steps[t - 1].u)
        } else {
            (&zeros, &zeros)
        };
        let d_u = d_outputs.row(t);
        for k in 0..b {
            let dy = d_u[k] + dy_next[k];
            let hc = s.c[k].tanh();
            d_o[k] = dy * hc * s.o[k] * (1.0 - s.o[k]);
            let dc = dy * s.o[k] * (1.0 - hc * hc) + dc_next[k] + p.p_o[k] * d_o[k];
            d_f[k] = dc * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
            d_i[k] = dc * s.z[k] * s.i[k] * (1.0 - s.i[k]);
            d_z[k] = dc * s.i[k] * (1.0 - s.z[k] * s.z[k]);

            grads.p_o[k] += d_o[k] * s.c[k];
            grads.p_i[k] += d_i[k] * c_prev[k];
            grads.p_f[k] += d_f[k] * c_prev[k];
            grads.b_z[k] += d_z[k];
            grads.b_i[k] += d_i[k];
            grads.b_f[k] += d_f[k];
            grads.b_o[k] += d_o[k];

            dc_next[k] = dc * s.f[k] + p.p_i[k] * d_i[k] + p.p_f[k] * d_f[k];
        }

        grads.w_z.add_outer(&d_z, &s.x);
        grads.w_i.add_outer(&d_i, &s.x);
        grads.w_f.add_outer(&d_f, &s.x);
        grads.w_o.add_outer(&d_o, &s.x);
        grads.r_z.add_outer(&d_z, y_prev);
        grads.r_i.add_outer(&d_i, y_prev);
        grads.r_f.add_outer(&d_f, y_prev);
        grads.r_o.add_outer(&d_o, y_prev);

        dy_next.fill(0.0);
        p.r_z.mul_t_vec_acc(&d_z, &mut dy_next);
        p.r_i.mul_t_vec_acc(&d_i, &mut dy_next);
        p.r_f.mul_t_vec_acc(&d_f, &mut dy_next);
        p.r_o.mul_t_vec_acc(&d_o, &mut dy_next);
    }
}
