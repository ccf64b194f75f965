use serde::{Deserialize, Serialize};

use crate::dataio::Normalization;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::nn::ModelDims;
use crate::optim::OptimizerChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub segment_length: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    /// Class count; inferred from the dataset when absent.
    pub classes: Option<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerChoice,
    pub seed: u64,
    pub normalization: Normalization,
    /// Each entry adds one corrupted copy of every training signal.
    pub augmentation: Vec<NoiseSpec>,
    /// Optional clip-by-global-norm threshold applied to batch gradients.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            segment_length: 2,
            lstm_units: 100,
            dense_units: 50,
            classes: None,
            batch_size: 64,
            epochs: 40,
            optimizer: OptimizerChoice::default(),
            seed: 0,
            normalization: Normalization::default(),
            augmentation: Vec::new(),
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, signal_length: usize) -> Result<()> {
        let counts = [
            ("segment_length", self.segment_length),
            ("lstm_units", self.lstm_units),
            ("dense_units", self.dense_units),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !self.segment_length.is_power_of_two() || !signal_length.is_multiple_of(self.segment_length) {
            return Err(Error::Config(format!(
                "segment_length {} must be a power of two dividing the signal length {signal_length}",
                self.segment_length
            )));
        }
        if let Some(k) = self.classes {
            if k < 2 {
                return Err(Error::Config(format!("need at least two classes, got {k}")));
            }
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        for spec in &self.augmentation {
            spec.validate()?;
        }
        self.optimizer.validate()
    }

    pub fn model_dims(&self, classes: usize) -> ModelDims {
        ModelDims {
            input_size: self.segment_length,
            lstm_units: self.lstm_units,
            dense_units: self.dense_units,
            classes: self.classes.unwrap_or(classes),
        }
    }
}
