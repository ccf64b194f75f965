//! Central-difference verification of [`model_backward`].

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{model_backward, model_forward, ModelParams, TENSOR_NAMES};
use crate::dataio::SegmentedExample;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Below this `|analytic| + |numeric|` the absolute error is reported.
pub const ABSOLUTE_FALLBACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tolerance: f64,
    /// Coordinates to sample; `None` checks every parameter.
    pub max_coordinates: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            max_coordinates: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_error: f64,
    pub worst: Option<CoordinateCheck>,
    pub passed: bool,
}

/// Relative error with an absolute fallback near zero.
pub fn comparison_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if analytic.abs() + numeric.abs() < ABSOLUTE_FALLBACK {
        diff
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

pub fn gradient_check(params: &ModelParams, example: &SegmentedExample, options: &GradCheckOptions) -> Result<GradCheckReport> {
    if !(options.step > 0.0) {
        return Err(Error::argument(format!("finite-difference step must be positive, got {}", options.step)));
    }
    let label = example.label;
    let trace = model_forward(params, example)?;
    let grads = model_backward(params, &trace, label)?;

    let mut coords: Vec<(usize, usize)> = params
        .tensors()
        .iter()
        .enumerate()
        .flat_map(|(t, v)| (0..v.len()).map(move |i| (t, i)))
        .collect();
    if let Some(limit) = options.max_coordinates {
        coords.shuffle(&mut rng_from_seed(options.seed));
        coords.truncate(limit);
    }

    let loss_at = |p: &ModelParams| -> Result<f64> { Ok(model_forward(p, example)?.loss(label)) };
    let mut probe = params.clone();
    let mut worst: Option<CoordinateCheck> = None;
    for &(t, i) in &coords {
        let original = probe.tensors()[t][i];
        probe.tensors_mut()[t][i] = original + options.step;
        let plus = loss_at(&probe)?;
        probe.tensors_mut()[t][i] = original - options.step;
        let minus = loss_at(&probe)?;
        probe.tensors_mut()[t][i] = original;

        let numeric = (plus - minus) / (2.0 * options.step);
        let analytic = grads.tensors()[t][i];
        let error = comparison_error(analytic, numeric);
        if worst.as_ref().is_none_or(|w| error > w.error) {
            worst = Some(CoordinateCheck {
                tensor: TENSOR_NAMES[t].to_string(),
                index: i,
                analytic,
                numeric,
                error,
            });
        }
    }
    let max_error = worst.as_ref().map_or(0.0, |w| w.error);
    Ok(GradCheckReport {
        checked: coords.len(),
        max_error,
        worst,
        passed: max_error <= options.tolerance,
    })
}
