//! Adam with bias correction.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::layers::{LayerParams, NamedTensor};
use crate::tensor::{Real, Tensor};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OptimizerState<T = f32> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    /// First and second moments keyed by full weight name.
    moments: BTreeMap<String, (Tensor<T>, Tensor<T>)>,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        Ok(Self {
            learning_rate,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            step_count: 0,
            moments: BTreeMap::new(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update of every trainable tensor. `grads` are keyed by full
/// weight name (`layer.weight`); frozen layers are left untouched.
pub fn adam_step<T: Real>(
    state: &mut OptimizerState<T>,
    params: &mut [LayerParams<T>],
    grads: &[NamedTensor<T>],
) -> Result<()> {
    let by_name: HashMap<&str, &Tensor<T>> = grads.iter().map(|g| (g.name.as_str(), &g.tensor)).collect();

    // Validate before touching any state so a failed call changes nothing.
    for layer in params.iter().filter(|l| l.trainable) {
        for (full, w) in layer.full_names().zip(&layer.weights) {
            match by_name.get(full.as_str()) {
                None => return Err(Error::Usage(format!("no gradient for trainable weight {full}"))),
                Some(g) if g.shape() != w.tensor.shape() => {
                    return Err(Error::Usage(format!(
                        "gradient for {full} has shape {:?}, weight has {:?}",
                        g.shape(),
                        w.tensor.shape()
                    )))
                }
                Some(_) => {}
            }
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (T::from_f64(state.beta1), T::from_f64(state.beta2));
    let (one_b1, one_b2) = (T::from_f64(1.0 - state.beta1), T::from_f64(1.0 - state.beta2));
    let bc1 = T::from_f64(1.0 - state.beta1.powi(t));
    let bc2 = T::from_f64(1.0 - state.beta2.powi(t));
    let lr = T::from_f64(state.learning_rate);
    let eps = T::from_f64(state.epsilon);

    for layer in params.iter_mut().filter(|l| l.trainable) {
        let names: Vec<String> = layer.full_names().collect();
        for (full, w) in names.into_iter().zip(layer.weights.iter_mut()) {
            let g = by_name[full.as_str()];
            let (m, v) = state
                .moments
                .entry(full)
                .or_insert_with(|| (Tensor::zeros(g.shape()), Tensor::zeros(g.shape())));
            let (m, v) = (m.data_mut(), v.data_mut());
            for (k, wk) in w.tensor.data_mut().iter_mut().enumerate() {
                let gk = g.data()[k];
                m[k] = b1 * m[k] + one_b1 * gk;
                v[k] = b2 * v[k] + one_b2 * gk * gk;
                let step = lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
                if step != T::zero() {
                    *wk = *wk - step;
                }
            }
        }
    }
    Ok(())
}
