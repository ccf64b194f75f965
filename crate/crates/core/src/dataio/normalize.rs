use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "raw")]
    Raw,
    /// Zero mean, unit population standard deviation per signal.
    #[default]
    #[serde(rename = "zscore")]
    PerSignalZscore,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "raw",
            Normalization::PerSignalZscore => "zscore",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "zscore" | "per_signal_zscore" => Ok(Normalization::PerSignalZscore),
            other => Err(Error::Config(format!("unknown normalization {other:?}; use raw or zscore"))),
        }
    }
}

/// Normalizes one signal in place. Returns `false` when the signal has no
/// variance; it is then only centred.
pub fn normalize_samples(samples: &mut [f64], mode: Normalization) -> bool {
    if mode == Normalization::Raw || samples.is_empty() {
        return true;
    }
    if samples.iter().all(|&s| s == samples[0]) {
        samples.fill(0.0);
        return false;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if std <= 1e-12 * scale {
        samples.iter_mut().for_each(|s| *s -= mean);
        return false;
    }
    samples.iter_mut().for_each(|s| *s = (*s - mean) / std);
    true
}

/// Normalizes every signal; returns the indices of zero-variance signals.
pub fn normalize(dataset: &mut Dataset, mode: Normalization) -> Vec<usize> {
    let mut degenerate = Vec::new();
    for (i, signal) in dataset.signals.iter_mut().enumerate() {
        if !normalize_samples(&mut signal.samples, mode) {
            warn!("signal {} has zero variance; centred but not scaled", signal.source_id);
            degenerate.push(i);
        }
    }
    degenerate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{EegSignal, SetLabel};

    fn dataset(samples: Vec<Vec<f64>>) -> Dataset {
        let n = samples.len();
        Dataset {
            signals: samples
                .into_iter()
                .map(|s| EegSignal {
                    samples: s,
                    set_label: SetLabel::A,
                    source_id: "x".into(),
                    sampling_rate_hz: 173.6,
                })
                .collect(),
            labels: vec![0; n],
            class_names: vec!["A".into(), "E".into()],
            positive_class: 1,
        }
    }

    #[test]
    fn two_point_zscore() {
        let mut ds = dataset(vec![vec![1.0, 3.0]]);
        assert!(normalize(&mut ds, Normalization::PerSignalZscore).is_empty());
        assert_eq!(ds.signals[0].samples, vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_signal_becomes_zero_with_warning() {
        let mut ds = dataset(vec![vec![0.1; 4096], vec![1.0, 2.0]]);
        assert_eq!(normalize(&mut ds, Normalization::PerSignalZscore), vec![0]);
        assert!(ds.signals[0].samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn raw_is_identity() {
        let original = dataset(vec![vec![1.5, -2.25, 1e9], vec![0.0; 3]]);
        let mut ds = original.clone();
        assert!(normalize(&mut ds, Normalization::Raw).is_empty());
        assert_eq!(ds, original);
    }

    #[test]
    fn zscore_moments() {
        let mut s: Vec<f64> = (0..4096).map(|i| 100.0 + 30.0 * (i as f64 * 0.1).sin()).collect();
        normalize_samples(&mut s, Normalization::PerSignalZscore);
        let mean = s.iter().sum::<f64>() / 4096.0;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4096.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }
}
