//! Parameter updates: plain SGD and bias-corrected Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerChoice {
    Sgd { learning_rate: f64 },
    Adam(AdamConfig),
}

impl Default for OptimizerChoice {
    fn default() -> Self {
        OptimizerChoice::Adam(AdamConfig::default())
    }
}

impl OptimizerChoice {
    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerChoice::Sgd { learning_rate } => *learning_rate,
            OptimizerChoice::Adam(c) => c.learning_rate,
        }
    }

    pub fn with_learning_rate(self, lr: f64) -> Self {
        match self {
            OptimizerChoice::Sgd { .. } => OptimizerChoice::Sgd { learning_rate: lr },
            OptimizerChoice::Adam(c) => OptimizerChoice::Adam(AdamConfig { learning_rate: lr, ..c }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerChoice::Sgd { learning_rate } if *learning_rate > 0.0 => Ok(()),
            OptimizerChoice::Sgd { learning_rate } => {
                Err(Error::Config(format!("SGD learning rate must be positive, got {learning_rate}")))
            }
            OptimizerChoice::Adam(c) => c.validate(),
        }
    }
}

/// Adam moment accumulators, shaped like the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            first_moment: ModelParams::zeros(params.dims()),
            second_moment: ModelParams::zeros(params.dims()),
            step: 0,
        }
    }
}

fn check_shapes(params: &ModelParams, grads: &ModelParams) -> Result<()> {
    if !params.same_shape(grads) {
        return Err(Error::shape("gradient shape differs from parameter shape"));
    }
    Ok(())
}

/// `theta -= lr * g`.
pub fn sgd_step(params: &mut ModelParams, grads: &ModelParams, learning_rate: f64) -> Result<()> {
    check_shapes(params, grads)?;
    params.add_scaled(-learning_rate, grads);
    Ok(())
}

pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, config: &AdamConfig, state: &mut OptimizerState) -> Result<()> {
    check_shapes(params, grads)?;
    if !params.same_shape(&state.first_moment) || !params.same_shape(&state.second_moment) {
        return Err(Error::shape("optimizer state shape differs from parameter shape"));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.beta1.powi(t);
    let bias2 = 1.0 - config.beta2.powi(t);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.first_moment.tensors_mut())
        .zip(state.second_moment.tensors_mut());
    for (((theta, g), m), v) in tensors {
        for j in 0..theta.len() {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            theta[j] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_by_global_norm(grads: &mut ModelParams, max_norm: f64) -> f64 {
    let norm = grads.squared_norm().sqrt();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Owns whichever optimizer a training run uses.
#[derive(Debug, Clone)]
pub struct Optimizer {
    choice: OptimizerChoice,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(choice: OptimizerChoice, params: &ModelParams) -> Result<Self> {
        choice.validate()?;
        Ok(Self {
            choice,
            state: OptimizerState::new(params),
        })
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        match &self.choice {
            OptimizerChoice::Sgd { learning_rate } => {
                self.state.step += 1;
                sgd_step(params, grads, *learning_rate)
            }
            OptimizerChoice::Adam(config) => adam_step(params, grads, config, &mut self.state),
        }
    }

    pub fn iterations(&self) -> u64 {
        self.state.step
    }
}
