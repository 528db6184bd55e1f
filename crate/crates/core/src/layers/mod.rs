//! Forward and explicit backward passes for every layer of the network.
//!
//! Layers are free functions over [`Tensor`]s. Each forward returns its
//! output together with a cache; the matching backward consumes that cache,
//! so a cache can never be replayed.

mod activation;
mod conv;
mod dense;
mod fuse;
mod init;
mod lstm;
mod pool;

pub use activation::{relu_backward, relu_forward, sigmoid, tanh_open, ReluCache};
pub use conv::{conv1d_backward, conv1d_forward, Conv1dCache, Conv1dGrads};
pub use dense::{dense_backward, dense_forward, Activation, DenseCache, DenseGrads};
pub use fuse::{fuse_branches, split_fused};
pub use init::{glorot_limit, init_params, LayerSpec};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads};
pub use pool::{maxpool1d_backward, maxpool1d_forward, PoolCache};

use crate::tensor::{Real, Tensor};

/// A weight tensor with its short name within a layer ("kernel", "W", ...).
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor<T = f32> {
    pub name: String,
    pub tensor: Tensor<T>,
}

impl<T: Real> NamedTensor<T> {
    pub fn new(name: impl Into<String>, tensor: Tensor<T>) -> Self {
        Self {
            name: name.into(),
            tensor,
        }
    }
}

/// The weights of one layer. Frozen layers (`trainable == false`) still take
/// part in forward and backward but are skipped by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T = f32> {
    pub name: String,
    pub weights: Vec<NamedTensor<T>>,
    pub trainable: bool,
}

impl<T: Real> LayerParams<T> {
    pub fn weight(&self, name: &str) -> &Tensor<T> {
        &self
            .weights
            .iter()
            .find(|w| w.name == name)
            .unwrap_or_else(|| panic!("layer {} has no weight {name}", self.name))
            .tensor
    }

    /// `layer.weight` style names of every tensor, in storage order.
    pub fn full_names(&self) -> impl Iterator<Item = String> + '_ {
        self.weights
            .iter()
            .map(move |w| format!("{}.{}", self.name, w.name))
    }

    pub fn cast<U: Real>(&self) -> LayerParams<U> {
        LayerParams {
            name: self.name.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| NamedTensor::new(w.name.clone(), w.tensor.cast()))
                .collect(),
            trainable: self.trainable,
        }
    }
}

fn check_dy<T: Real>(layer: &str, expected: &[usize], dy: &Tensor<T>) -> crate::Result<()> {
    if dy.shape() != expected {
        return Err(crate::Error::Usage(format!(
            "{layer} backward: upstream gradient {:?} does not match cached output {expected:?}",
            dy.shape()
        )));
    }
    Ok(())
}
