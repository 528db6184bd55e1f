use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LayerParams, NamedTensor};
use crate::data::fnv1a64;
use crate::tensor::{Real, Tensor};

/// Shape description of a trainable layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv1d {
        name: String,
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
    },
    Lstm {
        name: String,
        input_size: usize,
        hidden_size: usize,
    },
    Dense {
        name: String,
        input_size: usize,
        units: usize,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &str {
        match self {
            LayerSpec::Conv1d { name, .. } | LayerSpec::Lstm { name, .. } | LayerSpec::Dense { name, .. } => name,
        }
    }

    /// Weight names and shapes in storage order.
    pub fn weight_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            LayerSpec::Conv1d {
                kernel_size,
                in_channels,
                out_channels,
                ..
            } => vec![
                ("kernel", vec![kernel_size, in_channels, out_channels]),
                ("bias", vec![out_channels]),
            ],
            LayerSpec::Lstm {
                input_size,
                hidden_size,
                ..
            } => vec![
                ("W", vec![input_size, 4 * hidden_size]),
                ("U", vec![hidden_size, 4 * hidden_size]),
                ("b", vec![4 * hidden_size]),
            ],
            LayerSpec::Dense {
                input_size, units, ..
            } => vec![("W", vec![input_size, units]), ("b", vec![units])],
        }
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fan-in/fan-out of a weight tensor: receptive field times channels for
/// conv kernels, rows/columns for matrices.
fn fans(shape: &[usize]) -> (usize, usize) {
    match shape {
        [k, c_in, c_out] => (k * c_in, k * c_out),
        [rows, cols] => (*rows, *cols),
        _ => unreachable!("only matrices and kernels are initialized randomly"),
    }
}


/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.0.
/// Deterministic in `(spec, seed)`.
pub fn init_params<T: Real>(spec: &LayerSpec, seed: u64) -> LayerParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(spec.name().as_bytes()));
    let weights = spec
        .weight_shapes()
        .into_iter()
        .map(|(name, shape)| {
            let tensor = if shape.len() == 1 {
                let mut b = Tensor::zeros(&shape);
                if let LayerSpec::Lstm { hidden_size, .. } = spec {
                    b.data_mut()[*hidden_size..2 * hidden_size].fill(T::one());
                }
                b
            } else {
                let (fi, fo) = fans(&shape);
                let limit = glorot_limit(fi, fo);
                let n = shape.iter().product();
                let data = (0..n)
                    .map(|_| T::from_f64(rng.gen_range(-limit..=limit)))
                    .collect();
                Tensor::new(&shape, data).expect("shape from spec")
            };
            NamedTensor::new(name, tensor)
        })
        .collect();
    LayerParams {
        name: spec.name().to_string(),
        weights,
        trainable: true,
    }
}
