use serde::{Deserialize, Serialize};

use super::{Dataset, EegSignal};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// An `M x L` matrix whose row `t` is the timestep input `x^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedExample {
    pub segments: Matrix,
    pub label: usize,
}

impl SegmentedExample {
    pub fn timesteps(&self) -> usize {
        self.segments.rows()
    }

    pub fn segment_length(&self) -> usize {
        self.segments.cols()
    }
}

/// Splits `samples` into non-overlapping rows of `segment_length` samples.
pub fn segment_samples(samples: &[f64], segment_length: usize) -> Result<Matrix> {
    if segment_length == 0 {
        return Err(Error::argument("segment length must be at least 1"));
    }
    if samples.is_empty() || !samples.len().is_multiple_of(segment_length) {
        return Err(Error::Segmentation {
            signal_length: samples.len(),
            segment_length,
        });
    }
    Matrix::from_vec(samples.len() / segment_length, segment_length, samples.to_vec())
}

pub fn segment(signal: &EegSignal, segment_length: usize, label: usize) -> Result<SegmentedExample> {
    Ok(SegmentedExample {
        segments: segment_samples(&signal.samples, segment_length)?,
        label,
    })
}

pub fn segment_dataset(dataset: &Dataset, segment_length: usize) -> Result<Vec<SegmentedExample>> {
    dataset
        .signals
        .iter()
        .zip(&dataset.labels)
        .map(|(s, &label)| segment(s, segment_length, label))
        .collect()
}

/// Concatenates the rows back into one sequence.
pub fn flatten(example: &SegmentedExample) -> Vec<f64> {
    example.segments.as_slice().to_vec()
}
