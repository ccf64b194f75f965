//! Time-distributed dense layer, temporal average pooling and the softmax
//! classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Smallest probability fed to `ln` in the cross-entropy.
pub const PROBABILITY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    /// `units x input`.
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(units: usize, input: usize) -> Self {
        Self {
            w: Matrix::zeros(units, input),
            b: vec![0.0; units],
        }
    }

    pub fn units(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.rows() != self.b.len() {
            return Err(Error::shape(format!(
                "dense weights have {} rows but {} biases",
                self.w.rows(),
                self.b.len()
            )));
        }
        Ok(())
    }
}

/// `v^t = tanh(W u^t + b)` for every row of `inputs`.
pub fn dense_forward(params: &DenseParams, inputs: &Matrix) -> Result<Matrix> {
    Ok(dense_forward_full(params, inputs)?.1)
}

/// Returns (pre-activations, activations).
pub(crate) fn dense_forward_full(params: &DenseParams, inputs: &Matrix) -> Result<(Matrix, Matrix)> {
    params.validate()?;
    if inputs.cols() != params.w.cols() {
        return Err(Error::shape(format!(
            "dense layer expects width {}, got {}",
            params.w.cols(),
            inputs.cols()
        )));
    }
    let d = params.units();
    let mut pre = Matrix::zeros(inputs.rows(), d);
    let mut out = Matrix::zeros(inputs.rows(), d);
    for t in 0..inputs.rows() {
        let row = pre.row_mut(t);
        row.copy_from_slice(&params.b);
        params.w.mul_vec_acc(inputs.row(t), row);
        for (o, a) in out.row_mut(t).iter_mut().zip(pre.row(t)) {
            *o = a.tanh();
        }
    }
    Ok((pre, out))
}

/// Column means over the timestep axis.
pub fn average_pool(features: &Matrix) -> Result<Vec<f64>> {
    let m = features.rows();
    if m == 0 {
        return Err(Error::argument("average pooling over zero timesteps"));
    }
    let mut pooled = vec![0.0; features.cols()];
    for t in 0..m {
        for (p, v) in pooled.iter_mut().zip(features.row(t)) {
            *p += v;
        }
    }
    pooled.iter_mut().for_each(|p| *p /= m as f64);
    Ok(pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    /// `classes x features`; row `k` is `theta_k`.
    pub theta: Matrix,
    pub bias: Vec<f64>,
}

impl SoftmaxParams {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            theta: Matrix::zeros(classes, features),
            bias: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.rows() != self.bias.len() {
            return Err(Error::shape(format!(
                "softmax has {} parameter rows but {} biases",
                self.theta.rows(),
                self.bias.len()
            )));
        }
        Ok(())
    }
}

pub fn logits(params: &SoftmaxParams, features: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if features.len() != params.theta.cols() {
        return Err(Error::shape(format!(
            "softmax expects {} features, got {}",
            params.theta.cols(),
            features.len()
        )));
    }
    let mut out = params.bias.clone();
    params.theta.mul_vec_acc(features, &mut out);
    Ok(out)
}

/// Softmax with the maximum logit subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax_hypothesis(params: &SoftmaxParams, features: &[f64]) -> Result<Vec<f64>> {
    Ok(softmax(&logits(params, features)?))
}

/// `-ln P(label)` computed from logits via log-sum-exp, with the
/// probability floored at [`PROBABILITY_FLOOR`].
pub fn nll_from_logits(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    (lse - logits[label]).min(-PROBABILITY_FLOOR.ln())
}

/// Mean over the batch of `-ln P[true class]`.
pub fn cross_entropy(posteriors: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if posteriors.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} posteriors for {} labels",
            posteriors.len(),
            labels.len()
        )));
    }
    if posteriors.is_empty() {
        return Err(Error::argument("cross-entropy of an empty batch"));
    }
    let mut total = 0.0;
    for (p, &label) in posteriors.iter().zip(labels) {
        let prob = *p.get(label).ok_or_else(|| {
            Error::argument(format!("label {label} out of range for {} classes", p.len()))
        })?;
        total -= prob.max(PROBABILITY_FLOOR).ln();
    }
    Ok(total / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_zero_and_near_identity() {
        let u = Matrix::from_rows(&[vec![0.01, -0.02], vec![0.003, 0.0]]).unwrap();
        let zero = dense_forward(&DenseParams::zeros(3, 2), &u).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));

        let mut eye = DenseParams::zeros(2, 2);
        eye.w[(0, 0)] = 1.0;
        eye.w[(1, 1)] = 1.0;
        let v = dense_forward(&eye, &u).unwrap();
        for (a, b) in v.as_slice().iter().zip(u.as_slice()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(dense_forward(&eye, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn pooling() {
        let one = Matrix::from_rows(&[vec![1.5, -2.0]]).unwrap();
        assert_eq!(average_pool(&one).unwrap(), vec![1.5, -2.0]);
        let two = Matrix::from_rows(&[vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(average_pool(&two).unwrap(), vec![2.0, 2.0]);
        assert!(average_pool(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn softmax_closed_forms() {
        assert!(softmax(&[0.3; 5]).iter().all(|&p| (p - 0.2).abs() < 1e-15));
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let shifted = softmax(&[2f64.ln() + 1000.0, 1000.0]);
        assert!((shifted[0] - p[0]).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1, 0]).unwrap(), 0.0);
        let uniform = cross_entropy(&[vec![0.2; 5]], &[3]).unwrap();
        assert!((uniform - 5f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&[vec![0.5, 0.5]], &[0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[vec![0.5, 0.5]], &[2]).is_err());
        assert!(cross_entropy(&[vec![1.0, 0.0]], &[1]).unwrap().is_finite());
    }

    #[test]
    fn nll_matches_cross_entropy() {
        let l = [0.3, -1.2, 2.5];
        for label in 0..3 {
            let a = nll_from_logits(&l, label);
            let b = cross_entropy(&[softmax(&l)], &[label]).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(nll_from_logits(&[0.0, 1e4], 0), -PROBABILITY_FLOOR.ln());
    }
}
