use super::check_dy;
use crate::error::Result;
use crate::tensor::{Real, Tensor};

fn open_bound<T: Real>() -> T {
    T::one() - T::epsilon() / T::from_f64(2.0)
}

/// Logistic function, kept strictly inside (0, 1) even where the
/// floating-point result would round to an endpoint.
#[inline]
pub fn sigmoid<T: Real>(z: T) -> T {
    let s = if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    };
    s.max(T::min_positive_value()).min(open_bound())
}

/// `tanh`, kept strictly inside (-1, 1).
#[inline]
pub fn tanh_open<T: Real>(z: T) -> T {
    let b = open_bound::<T>();
    z.tanh().max(-b).min(b)
}

#[derive(Debug)]
pub struct ReluCache<T> {
    input: Tensor<T>,
}

pub fn relu_forward<T: Real>(x: &Tensor<T>) -> (Tensor<T>, ReluCache<T>) {
    let y = Tensor::new(
        x.shape(),
        x.data().iter().map(|&v| v.max(T::zero())).collect(),
    )
    .expect("same shape");
    (y, ReluCache { input: x.clone() })
}

/// Subgradient at exactly zero is zero.
pub fn relu_backward<T: Real>(cache: ReluCache<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
    check_dy("relu", cache.input.shape(), dy)?;
    let dx = cache
        .input
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(dy.shape(), dx)
}
