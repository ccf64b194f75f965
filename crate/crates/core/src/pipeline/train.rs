use log::debug;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::dataio::SegmentedExample;
use crate::error::{Error, Result};
use crate::nn::{argmax, loss_and_gradient, model_forward, ModelParams};
use crate::optim::{clip_by_global_norm, Optimizer};
use crate::rng::{derive_seed, rng_from_seed};

const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Mean training loss of the freshly initialized model.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub iterations_per_epoch: usize,
    pub iterations: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: History,
}

/// Mean loss and accuracy of `params` over the selected examples.
pub fn loss_and_accuracy(params: &ModelParams, examples: &[SegmentedExample], indices: &[usize]) -> Result<(f64, f64)> {
    let per_example = indices
        .par_iter()
        .map(|&i| {
            let ex = &examples[i];
            let trace = model_forward(params, ex)?;
            Ok((trace.loss(ex.label), argmax(&trace.posterior) == ex.label))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_example.len() as f64;
    let loss = per_example.iter().map(|(l, _)| l).sum::<f64>() / n;
    let acc = per_example.iter().filter(|(_, ok)| *ok).count() as f64 / n;
    Ok((loss, acc))
}

/// Mini-batch training over `examples[train_indices]`.
///
/// Each epoch shuffles the training indices, walks them in batches of at
/// most `batch_size` (the last partial batch included), averages the
/// per-example gradients in index order and applies one optimizer step.
pub fn train(config: &TrainConfig, examples: &[SegmentedExample], train_indices: &[usize]) -> Result<TrainOutcome> {
    if train_indices.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let first = &examples[train_indices[0]];
    config.validate(first.timesteps() * first.segment_length())?;
    if let Some(bad) = train_indices.iter().find(|&&i| examples[i].segment_length() != config.segment_length) {
        return Err(Error::Config(format!(
            "example {bad} is segmented with L = {}, config says {}",
            examples[*bad].segment_length(),
            config.segment_length
        )));
    }
    let classes = train_indices.iter().map(|&i| examples[i].label).max().unwrap_or(0) + 1;
    let dims = config.model_dims(classes.max(2));
    if let Some(&i) = train_indices.iter().find(|&&i| examples[i].label >= dims.classes) {
        return Err(Error::Config(format!("label {} exceeds {} classes", examples[i].label, dims.classes)));
    }

    let mut params = ModelParams::init(dims, derive_seed(config.seed, INIT_STREAM));
    let mut optimizer = Optimizer::new(config.optimizer, &params)?;
    let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, SHUFFLE_STREAM));
    let (initial_loss, _) = loss_and_accuracy(&params, examples, train_indices)?;

    let mut order = train_indices.to_vec();
    let iterations_per_epoch = order.len().div_ceil(config.batch_size);
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .map(|&i| loss_and_gradient(&params, &examples[i]))
                .collect::<Result<Vec<_>>>()?;

            let mut grads = ModelParams::zeros(dims);
            let mut batch_loss = 0.0;
            for ((loss, g, posterior), &i) in results.iter().zip(batch) {
                batch_loss += loss;
                grads.add_scaled(1.0, g);
                if argmax(posterior) == examples[i].label {
                    correct += 1;
                }
            }
            grads.scale(1.0 / batch.len() as f64);
            if !batch_loss.is_finite() || !grads.squared_norm().is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                    loss: batch_loss / batch.len() as f64,
                });
            }
            if let Some(max_norm) = config.clip_norm {
                clip_by_global_norm(&mut grads, max_norm);
            }
            optimizer.step(&mut params, &grads)?;
            loss_sum += batch_loss;
        }
        let record = EpochRecord {
            epoch,
            mean_loss: loss_sum / order.len() as f64,
            accuracy: correct as f64 / order.len() as f64,
        };
        debug!("epoch {epoch}: loss {:.6} acc {:.4}", record.mean_loss, record.accuracy);
        epochs.push(record);
    }

    Ok(TrainOutcome {
        params,
        history: History {
            initial_loss,
            epochs,
            iterations_per_epoch,
            iterations: optimizer.iterations(),
        },
    })
}
