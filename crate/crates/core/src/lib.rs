//! Seizure detection from single-channel EEG with a peephole LSTM.
//!
//! The crate covers ingestion of the Bonn recordings, artifact and noise
//! synthesis, a from-scratch LSTM classifier with analytic gradients, and
//! the train/evaluate protocols used to score it.

pub mod checkpoint;
pub mod dataio;
pub mod error;
pub mod matrix;
pub mod nn;
pub mod noise;
pub mod optim;
pub mod pipeline;
pub mod rng;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use matrix::Matrix;
