//! The multi-scale convolutional LSTM.
//!
//! ```text
//! x (F x 1) ─┬─ conv_a (K=3, 32) → relu → maxpool ─┐
//!            └─ conv_b (K=5, 64) → relu → maxpool ─┴─ fuse (F/2 x 96)
//!   → lstm_1 (64, sequences) → lstm_2 (32, last) → dense_1 (100, relu) → dense_out (1, sigmoid)
//! ```
//!
//! Each tabular sample is read as a length-F sequence with one channel.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::layers::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, fuse_branches, init_params,
    lstm_backward, lstm_forward, maxpool1d_backward, maxpool1d_forward, relu_backward, relu_forward,
    split_fused, Activation, Conv1dCache, DenseCache, LayerParams, LayerSpec, LstmCache, NamedTensor,
    PoolCache, ReluCache,
};
use crate::tensor::{Real, Tensor};

pub const CONV_A: &str = "conv_a";
pub const CONV_B: &str = "conv_b";
pub const LSTM_1: &str = "lstm_1";
pub const LSTM_2: &str = "lstm_2";
pub const DENSE_1: &str = "dense_1";
pub const DENSE_OUT: &str = "dense_out";

pub const CONV_A_KERNEL: usize = 3;
pub const CONV_A_FILTERS: usize = 32;
pub const CONV_B_KERNEL: usize = 5;
pub const CONV_B_FILTERS: usize = 64;
pub const LSTM_1_UNITS: usize = 64;
pub const LSTM_2_UNITS: usize = 32;
pub const DENSE_1_UNITS: usize = 100;

pub const DEFAULT_THRESHOLD: f32 = 0.5;

const FUSED_CHANNELS: usize = CONV_A_FILTERS + CONV_B_FILTERS;

// Layer positions in `ModelParams::layers`.
const IDX_CONV_A: usize = 0;
const IDX_CONV_B: usize = 1;
const IDX_LSTM_1: usize = 2;
const IDX_LSTM_2: usize = 3;
const IDX_DENSE_1: usize = 4;
const IDX_DENSE_OUT: usize = 5;

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Layer specs for a model over `feature_count` inputs, in storage order.
pub fn architecture(feature_count: usize) -> Result<Vec<LayerSpec>> {
    if feature_count < 2 {
        return Err(Error::Config(format!(
            "the model needs at least 2 features for pooling, got {feature_count}"
        )));
    }
    Ok(vec![
        LayerSpec::Conv1d {
            name: CONV_A.into(),
            kernel_size: CONV_A_KERNEL,
            in_channels: 1,
            out_channels: CONV_A_FILTERS,
        },
        LayerSpec::Conv1d {
            name: CONV_B.into(),
            kernel_size: CONV_B_KERNEL,
            in_channels: 1,
            out_channels: CONV_B_FILTERS,
        },
        LayerSpec::Lstm {
            name: LSTM_1.into(),
            input_size: FUSED_CHANNELS,
            hidden_size: LSTM_1_UNITS,
        },
        LayerSpec::Lstm {
            name: LSTM_2.into(),
            input_size: LSTM_1_UNITS,
            hidden_size: LSTM_2_UNITS,
        },
        LayerSpec::Dense {
            name: DENSE_1.into(),
            input_size: LSTM_2_UNITS,
            units: DENSE_1_UNITS,
        },
        LayerSpec::Dense {
            name: DENSE_OUT.into(),
            input_size: DENSE_1_UNITS,
            units: 1,
        },
    ])
}

/// All weights of one model instance.
///
/// Every mutable borrow of the layers stamps a fresh generation, which
/// invalidates forward caches taken before the change.
#[derive(Debug, Clone)]
pub struct ModelParams<T = f32> {
    feature_count: usize,
    layers: Vec<LayerParams<T>>,
    generation: u64,
}

impl<T: Real> PartialEq for ModelParams<T> {
    fn eq(&self, other: &Self) -> bool {
        self.feature_count == other.feature_count && self.layers == other.layers
    }
}

impl<T: Real> ModelParams<T> {
    /// Fresh, deterministically initialized weights.
    pub fn build(feature_count: usize, seed: u64) -> Result<Self> {
        let layers = architecture(feature_count)?
            .iter()
            .map(|spec| init_params(spec, seed))
            .collect();
        Ok(Self {
            feature_count,
            layers,
            generation: next_generation(),
        })
    }

    /// Reassembles a model from named tensors, checking every name and shape
    /// against the architecture for `feature_count`.
    pub fn from_named(feature_count: usize, tensors: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let specs = architecture(feature_count)?;
        let expected: usize = specs.iter().map(|s| s.weight_shapes().len()).sum();
        if tensors.len() != expected {
            return Err(Error::Compatibility(format!(
                "expected {expected} weight tensors, found {}",
                tensors.len()
            )));
        }
        let mut it = tensors.into_iter();
        let mut layers = Vec::with_capacity(specs.len());
        for spec in &specs {
            let mut weights = Vec::new();
            for (wname, shape) in spec.weight_shapes() {
                let (name, tensor) = it.next().expect("count checked");
                let full = format!("{}.{wname}", spec.name());
                if name != full || tensor.shape() != shape.as_slice() {
                    return Err(Error::Compatibility(format!(
                        "expected tensor {full} {shape:?}, found {name} {:?}",
                        tensor.shape()
                    )));
                }
                weights.push(NamedTensor::new(wname, tensor));
            }
            layers.push(LayerParams {
                name: spec.name().to_string(),
                weights,
                trainable: true,
            });
        }
        Ok(Self {
            feature_count,
            layers,
            generation: next_generation(),
        })
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams<T>] {
        self.generation = next_generation();
        &mut self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&LayerParams<T>> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn set_trainable(&mut self, layer: &str, trainable: bool) -> Result<()> {
        let l = self
            .layers
            .iter_mut()
            .find(|l| l.name == layer)
            .ok_or_else(|| Error::Usage(format!("no layer named {layer}")))?;
        l.trainable = trainable;
        Ok(())
    }

    /// `(full name, tensor)` for every weight, in storage order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .flat_map(|l| l.full_names().zip(l.weights.iter().map(|w| &w.tensor)))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .map(|w| w.tensor.len())
            .sum()
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            feature_count: self.feature_count,
            layers: self.layers.iter().map(LayerParams::cast).collect(),
            generation: next_generation(),
        }
    }

    /// A gradient set of zeros shaped like these weights.
    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            tensors: self
                .named_tensors()
                .into_iter()
                .map(|(n, t)| NamedTensor::new(n, Tensor::zeros(t.shape())))
                .collect(),
        }
    }
}

/// Gradients keyed by full weight name, in the model's storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T = f32> {
    pub tensors: Vec<NamedTensor<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.tensors.iter().find(|t| t.name == name).map(|t| &t.tensor)
    }

    pub fn accumulate(&mut self, other: &Gradients<T>) -> Result<()> {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            if a.name != b.name {
                return Err(Error::Usage(format!("gradient order mismatch: {} vs {}", a.name, b.name)));
            }
            a.tensor.add_assign(&b.tensor)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            t.tensor.data_mut().iter_mut().for_each(|v| *v = *v * factor);
        }
    }
}

/// Everything the backward pass needs from one forward call.
#[derive(Debug)]
pub struct ForwardCache<T> {
    generation: u64,
    conv_a: Conv1dCache<T>,
    relu_a: ReluCache<T>,
    pool_a: PoolCache,
    conv_b: Conv1dCache<T>,
    relu_b: ReluCache<T>,
    pool_b: PoolCache,
    lstm_1: LstmCache<T>,
    lstm_2: LstmCache<T>,
    dense_1: DenseCache<T>,
    dense_out: DenseCache<T>,
    probability: T,
}

impl<T: Real> ForwardCache<T> {
    pub fn probability(&self) -> T {
        self.probability
    }
}

/// Anomaly probability for one `(F x 1)` sample, plus the cache for [`backward`].
pub fn forward<T: Real>(params: &ModelParams<T>, x: &Tensor<T>) -> Result<(T, ForwardCache<T>)> {
    if x.shape() != [params.feature_count, 1] {
        return Err(Error::dim(format!(
            "model expects input ({} x 1), got {:?}",
            params.feature_count,
            x.shape()
        )));
    }
    let l = &params.layers;
    let branch = |idx: usize, x: &Tensor<T>| -> Result<_> {
        let (y, conv) = conv1d_forward(x, l[idx].weight("kernel"), l[idx].weight("bias"))?;
        let (y, relu) = relu_forward(&y);
        let (y, pool) = maxpool1d_forward(&y)?;
        Ok((y, conv, relu, pool))
    };
    let (a, conv_a, relu_a, pool_a) = branch(IDX_CONV_A, x)?;
    let (b, conv_b, relu_b, pool_b) = branch(IDX_CONV_B, x)?;
    let fused = fuse_branches(&a, &b)?;

    let p1 = &l[IDX_LSTM_1];
    let (h1, lstm_1) = lstm_forward(&fused, p1.weight("W"), p1.weight("U"), p1.weight("b"), true)?;
    let p2 = &l[IDX_LSTM_2];
    let (h2, lstm_2) = lstm_forward(&h1, p2.weight("W"), p2.weight("U"), p2.weight("b"), false)?;

    let d1 = &l[IDX_DENSE_1];
    let (z, dense_1) = dense_forward(&h2, d1.weight("W"), d1.weight("b"), Activation::Relu)?;
    let d2 = &l[IDX_DENSE_OUT];
    let (p, dense_out) = dense_forward(&z, d2.weight("W"), d2.weight("b"), Activation::Sigmoid)?;
    let probability = p.data()[0];

    Ok((
        probability,
        ForwardCache {
            generation: params.generation,
            conv_a,
            relu_a,
            pool_a,
            conv_b,
            relu_b,
            pool_b,
            lstm_1,
            lstm_2,
            dense_1,
            dense_out,
            probability,
        },
    ))
}

/// Gradients of every weight (frozen ones included) given `d loss / d p`.
pub fn backward<T: Real>(
    params: &ModelParams<T>,
    cache: ForwardCache<T>,
    dloss_dp: T,
) -> Result<Gradients<T>> {
    if cache.generation != params.generation {
        return Err(Error::Usage(
            "stale forward cache: the weights changed after the forward pass".into(),
        ));
    }
    let l = &params.layers;

    let d2 = dense_backward(cache.dense_out, l[IDX_DENSE_OUT].weight("W"), &Tensor::vector(vec![dloss_dp])?)?;
    let d1 = dense_backward(cache.dense_1, l[IDX_DENSE_1].weight("W"), &d2.dx)?;
    let p2 = &l[IDX_LSTM_2];
    let g2 = lstm_backward(cache.lstm_2, p2.weight("W"), p2.weight("U"), &d1.dx)?;
    let p1 = &l[IDX_LSTM_1];
    let g1 = lstm_backward(cache.lstm_1, p1.weight("W"), p1.weight("U"), &g2.dx)?;

    let (da, db) = split_fused(&g1.dx, CONV_A_FILTERS)?;
    let da = relu_backward(cache.relu_a, &maxpool1d_backward(cache.pool_a, &da)?)?;
    let ga = conv1d_backward(cache.conv_a, l[IDX_CONV_A].weight("kernel"), &da)?;
    let db = relu_backward(cache.relu_b, &maxpool1d_backward(cache.pool_b, &db)?)?;
    let gb = conv1d_backward(cache.conv_b, l[IDX_CONV_B].weight("kernel"), &db)?;

    let named = |layer: &str, w: &str, t: Tensor<T>| NamedTensor::new(format!("{layer}.{w}"), t);
    Ok(Gradients {
        tensors: vec![
            named(CONV_A, "kernel", ga.dkernel),
            named(CONV_A, "bias", ga.dbias),
            named(CONV_B, "kernel", gb.dkernel),
            named(CONV_B, "bias", gb.dbias),
            named(LSTM_1, "W", g1.dw),
            named(LSTM_1, "U", g1.du),
            named(LSTM_1, "b", g1.db),
            named(LSTM_2, "W", g2.dw),
            named(LSTM_2, "U", g2.du),
            named(LSTM_2, "b", g2.db),
            named(DENSE_1, "W", d1.dw),
            named(DENSE_1, "b", d1.db),
            named(DENSE_OUT, "W", d2.dw),
            named(DENSE_OUT, "b", d2.db),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f32,
    pub label: u8,
    pub threshold: f32,
}

impl Prediction {
    pub fn new(probability: f32, threshold: f32) -> Self {
        Self {
            probability,
            label: u8::from(probability >= threshold),
            threshold,
        }
    }
}

/// Probabilities and thresholded labels for every row of an `(N x F)` batch.
pub fn predict(params: &ModelParams<f32>, x: &Tensor<f32>, threshold: f32) -> Result<Vec<Prediction>> {
    if x.rank() != 2 || x.shape()[1] != params.feature_count {
        return Err(Error::dim(format!(
            "prediction batch {:?} does not have {} feature columns",
            x.shape(),
            params.feature_count
        )));
    }
    (0..x.shape()[0])
        .map(|i| {
            let sample = Tensor::from_slice(&[params.feature_count, 1], x.row(i))?;
            let (p, _) = forward(params, &sample)?;
            Ok(Prediction::new(p, threshold))
        })
        .collect()
}
