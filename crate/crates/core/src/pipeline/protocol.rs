//! Train/evaluate runs over a split plan.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, AggregateMetrics, MetricsReport};
use super::train::{train, History};
use super::TrainConfig;
use crate::dataio::{normalize, segment_dataset, Dataset, SegmentedExample, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::noise::corrupt_dataset;

pub const METHOD_NAME: &str = "LSTM";
pub const CLASSIFIER_NAME: &str = "Softmax";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProtocolOptions {
    /// Keep each fold's trained parameters in the result.
    pub keep_params: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub history: History,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub params: Option<ModelParams>,
}

/// One row of a results table, values in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    pub classifier: String,
    pub training_testing: String,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub problem: String,
    pub class_names: Vec<String>,
    pub positive_class: usize,
    pub split: SplitKind,
    pub split_seed: u64,
    pub config: TrainConfig,
    pub folds: Vec<FoldOutcome>,
    pub aggregate: AggregateMetrics,
}

impl ProtocolResult {
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.folds.iter().map(|f| f.metrics.clone()).collect()
    }

    pub fn table_row(&self) -> TableRow {
        TableRow {
            method: METHOD_NAME.to_string(),
            classifier: CLASSIFIER_NAME.to_string(),
            training_testing: self.split.table_label(),
            sensitivity: self.aggregate.sensitivity.map(|v| 100.0 * v),
            specificity: self.aggregate.specificity.map(|v| 100.0 * v),
            accuracy: 100.0 * self.aggregate.accuracy,
        }
    }
}

/// Normalizes a copy of the dataset and cuts every signal into segments.
pub fn prepare(dataset: &Dataset, config: &TrainConfig) -> Result<Vec<SegmentedExample>> {
    let mut copy = dataset.clone();
    normalize(&mut copy, config.normalization);
    segment_dataset(&copy, config.segment_length)
}

/// Per-fold result of training once and testing on several sources.
pub(crate) struct FoldRun {
    pub fold: usize,
    pub train_size: usize,
    pub history: History,
    pub params: Option<ModelParams>,
    pub metrics: Vec<MetricsReport>,
}

fn check_aligned(reference: &Dataset, other: &Dataset) -> Result<()> {
    if reference.labels != other.labels || reference.class_names != other.class_names {
        return Err(Error::Consistency("datasets of one run must share labels and classes".into()));
    }
    Ok(())
}

/// Trains one model per fold on the fold's training indices of every
/// `train_sources` dataset (plus `config.augmentation` copies of the first)
/// and evaluates it on the fold's test indices of every `test_sources`
/// dataset. All datasets must be index-aligned.
pub(crate) fn run_folds(
    train_sources: &[&Dataset],
    test_sources: &[&Dataset],
    config: &TrainConfig,
    plan: &SplitPlan,
    options: ProtocolOptions,
) -> Result<Vec<FoldRun>> {
    let reference = *train_sources
        .first()
        .ok_or_else(|| Error::argument("no training source"))?;
    if test_sources.is_empty() {
        return Err(Error::argument("no test source"));
    }
    if reference.is_empty() {
        return Err(Error::Config("empty dataset".into()));
    }
    for d in train_sources.iter().chain(test_sources) {
        check_aligned(reference, d)?;
    }
    let n = reference.len();
    if let Some(bad) = plan.folds.iter().flat_map(|f| f.train.iter().chain(&f.test)).find(|&&i| i >= n) {
        return Err(Error::Consistency(format!("split index {bad} out of range for {n} examples")));
    }

    let mut config = config.clone();
    config.classes.get_or_insert(reference.num_classes());
    config.validate(reference.signals[0].len())?;

    let mut corrupted = Vec::with_capacity(config.augmentation.len());
    for spec in &config.augmentation {
        corrupted.push(corrupt_dataset(reference, spec)?);
    }
    let mut pool = Vec::with_capacity(n * (train_sources.len() + corrupted.len()));
    for d in train_sources.iter().copied().chain(corrupted.iter()) {
        pool.extend(prepare(d, &config)?);
    }
    let copies = pool.len() / n;
    let tests = test_sources
        .iter()
        .map(|d| prepare(d, &config))
        .collect::<Result<Vec<_>>>()?;

    plan.folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let train_indices: Vec<usize> = (0..copies)
                .flat_map(|c| fold.train.iter().map(move |&i| c * n + i))
                .collect();
            let outcome = train(&config, &pool, &train_indices)?;
            let metrics = tests
                .iter()
                .map(|t| evaluate(&outcome.params, t, &fold.test, reference.positive_class, Some(k)))
                .collect::<Result<Vec<_>>>()?;
            info!("fold {k}: accuracy {:.4}", metrics[0].accuracy);
            Ok(FoldRun {
                fold: k,
                train_size: train_indices.len(),
                history: outcome.history,
                params: options.keep_params.then_some(outcome.params),
                metrics,
            })
        })
        .collect()
}

fn assemble(
    dataset: &Dataset,
    config: &TrainConfig,
    plan: &SplitPlan,
    folds: Vec<FoldOutcome>,
) -> Result<ProtocolResult> {
    let reports: Vec<MetricsReport> = folds.iter().map(|f| f.metrics.clone()).collect();
    Ok(ProtocolResult {
        problem: dataset.class_names.join("-"),
        class_names: dataset.class_names.clone(),
        positive_class: dataset.positive_class,
        split: plan.kind,
        split_seed: plan.seed,
        config: config.clone(),
        folds,
        aggregate: AggregateMetrics::from_reports(&reports)?,
    })
}

/// Trains on `train_source` and tests on `test_source`, fold by fold.
///
/// The two datasets are index-aligned copies of one another, e.g. clean
/// and corrupted versions of the same signals.
pub fn run_protocol_with(
    train_source: &Dataset,
    test_source: &Dataset,
    config: &TrainConfig,
    plan: &SplitPlan,
    options: ProtocolOptions,
) -> Result<ProtocolResult> {
    let runs = run_folds(&[train_source], &[test_source], config, plan, options)?;
    let folds = runs
        .into_iter()
        .zip(&plan.folds)
        .map(|(mut r, f)| FoldOutcome {
            fold: r.fold,
            train_size: r.train_size,
            test_size: f.test.len(),
            history: r.history,
            metrics: r.metrics.remove(0),
            params: r.params,
        })
        .collect();
    assemble(test_source, config, plan, folds)
}

pub fn run_protocol(
    dataset: &Dataset,
    config: &TrainConfig,
    plan: &SplitPlan,
    options: ProtocolOptions,
) -> Result<ProtocolResult> {
    run_protocol_with(dataset, dataset, config, plan, options)
}
