//! SNR and segment-length sweeps.

use std::fmt;
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{AggregateMetrics, MetricsReport};
use super::protocol::{run_folds, run_protocol, ProtocolOptions};
use super::TrainConfig;
use crate::dataio::{make_splits, ClassProblem, Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::noise::{corrupt_dataset, NoiseKind, NoiseSpec};
use crate::rng::derive_seed;

pub const DEFAULT_SNR_AXIS_DB: [f64; 9] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

/// Published accuracies (percent) kept as comparison points for noisy runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub problem: &'static str,
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub accuracy_percent: f64,
}

pub const REFERENCE_POINTS: [ReferencePoint; 3] = [
    ReferencePoint {
        problem: "A-E",
        kind: NoiseKind::Muscle,
        snr_db: -20.0,
        accuracy_percent: 99.75,
    },
    ReferencePoint {
        problem: "A-E",
        kind: NoiseKind::White,
        snr_db: -20.0,
        accuracy_percent: 99.25,
    },
    ReferencePoint {
        problem: "A-B-C-D-E",
        kind: NoiseKind::White,
        snr_db: -20.0,
        accuracy_percent: 53.50,
    },
];

pub fn reference_accuracy(problem: &ClassProblem, kind: NoiseKind, snr_db: f64) -> Option<f64> {
    let name = problem.to_string();
    REFERENCE_POINTS
        .iter()
        .find(|p| p.problem == name && p.kind == kind && p.snr_db == snr_db)
        .map(|p| p.accuracy_percent)
}

/// Powers of two from 1 up to `signal_length`.
pub fn default_length_axis(signal_length: usize) -> Vec<usize> {
    (0..usize::BITS)
        .map(|p| 1usize << p)
        .take_while(|&l| l <= signal_length)
        .filter(|&l| signal_length.is_multiple_of(l))
        .collect()
}

/// Which data the model sees when evaluated on corrupted signals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseProtocol {
    /// Train on clean signals plus their corrupted copies at the tested
    /// SNR; test on corrupted signals.
    #[default]
    Matched,
    /// Train on clean signals only; test on corrupted signals.
    CleanTrain,
}

impl fmt::Display for NoiseProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseProtocol::Matched => "matched",
            NoiseProtocol::CleanTrain => "clean-train",
        })
    }
}

impl FromStr for NoiseProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matched" => Ok(NoiseProtocol::Matched),
            "clean-train" => Ok(NoiseProtocol::CleanTrain),
            _ => Err(Error::Config(format!("unknown noise protocol {s:?}; use matched or clean-train"))),
        }
    }
}

/// How many models an SNR sweep trains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTraining {
    /// A fresh model for every (kind, SNR) point.
    #[default]
    PerPoint,
    /// One model per kind, trained on clean signals plus corrupted copies
    /// at every axis SNR (or clean only under `CleanTrain`), then tested
    /// at each SNR.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    SnrDb,
    SegmentLength,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// Noise kind name, or `clean`.
    pub kind: String,
    pub folds: Vec<MetricsReport>,
    pub aggregate: AggregateMetrics,
    /// Seed of the corrupting realization, when noise was added.
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub kinds: Vec<String>,
    pub problem: String,
    pub split: SplitKind,
    pub split_seed: u64,
    pub noise_protocol: Option<NoiseProtocol>,
    pub training: Option<SweepTraining>,
    pub config: TrainConfig,
    /// Kind-major, axis values in the given order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, kind: &str, axis_value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.kind == kind && p.axis_value == axis_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSweepOptions {
    pub protocol: NoiseProtocol,
    pub training: SweepTraining,
}

impl Default for SnrSweepOptions {
    fn default() -> Self {
        Self {
            protocol: NoiseProtocol::Matched,
            training: SweepTraining::PerPoint,
        }
    }
}

const NOISE_STREAM: u64 = 0x6e6f_6973_6500;

/// Seed of the corrupting realization for one noise kind. Every SNR of a
/// kind reuses it, so the points differ only in the noise scale.
pub fn sweep_noise_seed(seed: u64, kind: NoiseKind) -> u64 {
    let index = NoiseKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64;
    derive_seed(seed, NOISE_STREAM + index)
}

fn point_from_reports(axis_value: f64, kind: String, folds: Vec<MetricsReport>, noise_seed: Option<u64>) -> Result<SweepPoint> {
    Ok(SweepPoint {
        axis_value,
        kind,
        aggregate: AggregateMetrics::from_reports(&folds)?,
        folds,
        noise_seed,
    })
}

pub fn snr_sweep(
    dataset: &Dataset,
    config: &TrainConfig,
    plan: &SplitPlan,
    kinds: &[NoiseKind],
    snr_values: &[f64],
    options: SnrSweepOptions,
) -> Result<SweepResult> {
    if snr_values.is_empty() {
        return Err(Error::Config("SNR axis is empty".into()));
    }
    if kinds.is_empty() {
        return Err(Error::Config("no noise kinds to sweep".into()));
    }
    let corrupted_for = |kind: NoiseKind, snr_db: f64| {
        corrupt_dataset(
            dataset,
            &NoiseSpec {
                kind,
                snr_db,
                seed: sweep_noise_seed(config.seed, kind),
            },
        )
    };

    let points: Vec<SweepPoint> = match options.training {
        SweepTraining::PerPoint => {
            let grid: Vec<(NoiseKind, f64)> = kinds
                .iter()
                .flat_map(|&k| snr_values.iter().map(move |&s| (k, s)))
                .collect();
            grid.par_iter()
                .map(|&(kind, snr)| {
                    let noisy = corrupted_for(kind, snr)?;
                    let train_sources: Vec<&Dataset> = match options.protocol {
                        NoiseProtocol::Matched => vec![dataset, &noisy],
                        NoiseProtocol::CleanTrain => vec![dataset],
                    };
                    let runs = run_folds(&train_sources, &[&noisy], config, plan, ProtocolOptions::default())?;
                    let folds = runs.into_iter().map(|mut r| r.metrics.remove(0)).collect();
                    info!("{kind} at {snr} dB done");
                    point_from_reports(snr, kind.name().to_string(), folds, Some(sweep_noise_seed(config.seed, kind)))
                })
                .collect::<Result<_>>()?
        }
        SweepTraining::Shared => {
            let per_kind = kinds
                .par_iter()
                .map(|&kind| {
                    let noisy = snr_values
                        .iter()
                        .map(|&s| corrupted_for(kind, s))
                        .collect::<Result<Vec<_>>>()?;
                    let noisy_refs: Vec<&Dataset> = noisy.iter().collect();
                    let mut train_sources = vec![dataset];
                    if options.protocol == NoiseProtocol::Matched {
                        train_sources.extend(&noisy_refs);
                    }
                    let runs = run_folds(&train_sources, &noisy_refs, config, plan, ProtocolOptions::default())?;
                    let mut by_snr: Vec<Vec<MetricsReport>> = vec![Vec::new(); snr_values.len()];
                    for run in runs {
                        for (slot, m) in by_snr.iter_mut().zip(run.metrics) {
                            slot.push(m);
                        }
                    }
                    snr_values
                        .iter()
                        .zip(by_snr)
                        .map(|(&snr, folds)| {
                            point_from_reports(snr, kind.name().to_string(), folds, Some(sweep_noise_seed(config.seed, kind)))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            per_kind.into_iter().flatten().collect()
        }
    };

    Ok(SweepResult {
        axis: SweepAxis::SnrDb,
        axis_values: snr_values.to_vec(),
        kinds: kinds.iter().map(|k| k.name().to_string()).collect(),
        problem: dataset.class_names.join("-"),
        split: plan.kind,
        split_seed: plan.seed,
        noise_protocol: Some(options.protocol),
        training: Some(options.training),
        config: config.clone(),
        points,
    })
}

/// One clean run per segment length. The split plan is shared by all points.
pub fn segment_length_sweep(
    dataset: &Dataset,
    config: &TrainConfig,
    plan: &SplitPlan,
    lengths: &[usize],
) -> Result<SweepResult> {
    if lengths.is_empty() {
        return Err(Error::Config("segment-length axis is empty".into()));
    }
    let n = dataset.signals.first().map_or(0, |s| s.len());
    if let Some(&bad) = lengths.iter().find(|&&l| l == 0 || !n.is_multiple_of(l) || !l.is_power_of_two()) {
        return Err(Error::Config(format!(
            "segment length {bad} is not a power of two dividing the signal length {n}"
        )));
    }
    let points = lengths
        .par_iter()
        .map(|&l| {
            let point_config = TrainConfig {
                segment_length: l,
                ..config.clone()
            };
            let result = run_protocol(dataset, &point_config, plan, ProtocolOptions::default())?;
            info!("L = {l} done: accuracy {:.4}", result.aggregate.accuracy);
            point_from_reports(l as f64, "clean".to_string(), result.reports(), None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: SweepAxis::SegmentLength,
        axis_values: lengths.iter().map(|&l| l as f64).collect(),
        kinds: vec!["clean".to_string()],
        problem: dataset.class_names.join("-"),
        split: plan.kind,
        split_seed: plan.seed,
        noise_protocol: None,
        training: None,
        config: config.clone(),
        points,
    })
}

/// Builds the split plan for a dataset.
pub fn plan_for(dataset: &Dataset, split: SplitKind, seed: u64) -> Result<SplitPlan> {
    make_splits(&dataset.labels, split, seed)
}
