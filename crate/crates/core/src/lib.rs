//! Supervised anomaly detection for cellular-network KPI telemetry with a
//! multi-scale convolutional LSTM.
//!
//! Everything is implemented from scratch: tensors, layers with explicit
//! backward passes, Adam, SMOTE, exploratory statistics, a binary checkpoint
//! format and the scratch / fine-tune training loops.

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod layers;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod svg;
pub mod tensor;
pub mod train;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use tensor::{Real, Tensor};
