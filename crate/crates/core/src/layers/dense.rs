use super::activation::sigmoid;
use super::check_dy;
use crate::error::{Error, Result};
use crate::tensor::{mat_vec_acc, outer_acc, vec_mat_acc, Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

#[derive(Debug)]
pub struct DenseCache<T> {
    input: Tensor<T>,
    output: Tensor<T>,
    activation: Activation,
}

#[derive(Debug)]
pub struct DenseGrads<T> {
    pub dx: Tensor<T>,
    pub dw: Tensor<T>,
    pub db: Tensor<T>,
}

/// `y = act(x W + b)` for a single input vector.
pub fn dense_forward<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    activation: Activation,
) -> Result<(Tensor<T>, DenseCache<T>)> {
    if x.rank() != 1 || w.rank() != 2 || b.rank() != 1 || w.shape()[0] != x.len() || w.shape()[1] != b.len() {
        return Err(Error::dim(format!(
            "dense expects x (D), W (D x U), b (U); got {:?}, {:?}, {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    let units = b.len();
    let mut z = b.data().to_vec();
    vec_mat_acc(x.data(), w.data(), units, &mut z);
    match activation {
        Activation::None => {}
        Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(T::zero())),
        Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
    }
    let y = Tensor::new(&[units], z)?;
    let cache = DenseCache {
        input: x.clone(),
        output: y.clone(),
        activation,
    };
    Ok((y, cache))
}

pub fn dense_backward<T: Real>(
    cache: DenseCache<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    check_dy("dense", cache.output.shape(), dy)?;
    let dz: Vec<T> = match cache.activation {
        Activation::None => dy.data().to_vec(),
        // ReLU output is positive exactly where its pre-activation was.
        Activation::Relu => cache
            .output
            .data()
            .iter()
            .zip(dy.data())
            .map(|(&y, &g)| if y > T::zero() { g } else { T::zero() })
            .collect(),
        Activation::Sigmoid => cache
            .output
            .data()
            .iter()
            .zip(dy.data())
            .map(|(&y, &g)| g * y * (T::one() - y))
            .collect(),
    };
    let mut dx = Tensor::zeros(cache.input.shape());
    mat_vec_acc(w.data(), &dz, dx.data_mut());
    let mut dw = Tensor::zeros(w.shape());
    outer_acc(cache.input.data(), &dz, dw.data_mut());
    let db = Tensor::vector(dz)?;
    Ok(DenseGrads { dx, dw, db })
}
