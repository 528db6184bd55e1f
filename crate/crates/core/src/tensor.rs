//! Dense row-major tensors and the handful of kernels the layers build on.
//!
//! Training runs at `f32`. Every layer is generic over [`Real`] so the
//! gradient checks can run the exact same code at `f64`.

use std::fmt;
use std::iter::Sum;

use num_traits::Float;

use crate::error::{Error, Result};

/// Floating-point element type accepted by tensors and layers.
pub trait Real: Float + Default + fmt::Debug + fmt::Display + Sum + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("len", &self.data.len())
            .finish()
    }
}

fn shape_len(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dim(format!("invalid shape {shape:?}")));
        }
        if shape_len(shape) != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {} elements, got {}",
                shape_len(shape),
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Panics on an invalid shape; for internal construction where the shape is known good.
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && !shape.contains(&0),
            "invalid shape {shape:?}"
        );
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape_len(shape)],
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn from_slice(shape: &[usize], data: &[T]) -> Result<Self> {
        Self::new(shape, data.to_vec())
    }

    pub fn vector(data: Vec<T>) -> Result<Self> {
        let n = data.len();
        Self::new(&[n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// In-place access. Shape stays fixed; only the optimizer and the
    /// gradient accumulators write through this.
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[T] {
        let cols = self.shape[self.rank() - 1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let cols = self.shape[self.rank() - 1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    /// Element at a multi-index, row-major.
    pub fn at(&self, index: &[usize]) -> T {
        self.data[self.flat_index(index)]
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {index:?} out of bounds for {:?}", self.shape);
                acc * d + i
            })
    }

    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        if shape_len(new_shape) != self.len() || new_shape.contains(&0) || new_shape.is_empty() {
            return Err(Error::dim(format!(
                "cannot reshape {:?} into {new_shape:?}",
                self.shape
            )));
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// True when every element is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(format!(
                "{op}: shape mismatch {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&a| a * factor).collect(),
        }
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dim(format!(
                "add_assign: shape mismatch {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        axpy(T::one(), &other.data, &mut self.data);
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::dim(format!(
                "matmul: cannot multiply {:?} by {:?}",
                self.shape, other.shape
            )));
        }
        let (m, n) = (self.shape[0], other.shape[1]);
        let mut out = Self::zeros(&[m, n]);
        for i in 0..m {
            vec_mat_acc(self.row(i), &other.data, n, out.row_mut(i));
        }
        Ok(out)
    }
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
/// The summation order is fixed, so results are deterministic.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `out += x · W` for a row vector `x` (len k) and row-major `W` (k × n).
#[inline]
pub(crate) fn vec_mat_acc<T: Real>(x: &[T], w: &[T], n: usize, out: &mut [T]) {
    debug_assert_eq!(w.len(), x.len() * n);
    for (p, &xp) in x.iter().enumerate() {
        if xp != T::zero() {
            axpy(xp, &w[p * n..(p + 1) * n], out);
        }
    }
}

/// `out += W · v` where row-major `W` is (k × n) and `v` has length n, i.e.
/// the product with the transpose used by backward passes.
#[inline]
pub(crate) fn mat_vec_acc<T: Real>(w: &[T], v: &[T], out: &mut [T]) {
    let n = v.len();
    for (p, o) in out.iter_mut().enumerate() {
        *o = *o + dot(&w[p * n..(p + 1) * n], v);
    }
}

/// `W += x^T · v` (outer-product accumulation).
#[inline]
pub(crate) fn outer_acc<T: Real>(x: &[T], v: &[T], w: &mut [T]) {
    let n = v.len();
    for (p, &xp) in x.iter().enumerate() {
        if xp != T::zero() {
            axpy(xp, v, &mut w[p * n..(p + 1) * n]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], data: &[f32]) -> Tensor<f32> {
        Tensor::from_slice(shape, data).unwrap()
    }

    #[test]
    fn elementwise_examples() {
        assert_eq!(t(&[2], &[1., 2.]).add(&t(&[2], &[3., 4.])).unwrap().data(), &[4., 6.]);
        assert_eq!(t(&[3], &[1., 2., 3.]).scale(0.0).data(), &[0., 0., 0.]);
        assert_eq!(t(&[2], &[2., 3.]).mul(&t(&[2], &[4., 5.])).unwrap().data(), &[8., 15.]);
        assert_eq!(t(&[2], &[2., 3.]).sub(&t(&[2], &[4., 5.])).unwrap().data(), &[-2., -2.]);
    }

    #[test]
    fn elementwise_shape_mismatch_names_both_shapes() {
        let err = t(&[2], &[1., 2.]).add(&t(&[3], &[1., 2., 3.])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2]") && msg.contains("[3]"), "{msg}");
    }

    #[test]
    fn matmul_examples() {
        let id = t(&[2, 2], &[1., 0., 0., 1.]);
        let m = t(&[2, 2], &[1., 2., 3., 4.]);
        assert_eq!(id.matmul(&m).unwrap(), m);
        let r = t(&[1, 2], &[1., 2.]).matmul(&t(&[2, 1], &[3., 4.])).unwrap();
        assert_eq!(r.shape(), &[1, 1]);
        assert_eq!(r.data(), &[11.]);
        assert!(matches!(m.matmul(&t(&[3, 1], &[1., 2., 3.])), Err(Error::Dimension(_))));
    }

    fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for p in 0..k {
                    s += a[i * k + p] * b[p * n + j];
                }
                c[i * n + j] = s;
            }
        }
        c
    }

    #[test]
    fn matmul_matches_triple_loop_5x7x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f32> = (0..35).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f32> = (0..21).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = t(&[5, 7], &a).matmul(&t(&[7, 3], &b)).unwrap();
        let a64: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let b64: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let oracle = naive_matmul(&a64, &b64, 5, 7, 3);
        for (x, y) in c.data().iter().zip(&oracle) {
            assert!((*x as f64 - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn reshape_row_major() {
        let v = t(&[6], &[0., 1., 2., 3., 4., 5.]);
        let r = v.reshape(&[2, 3]).unwrap();
        assert_eq!(r.at(&[1, 2]), 5.0);
        assert_eq!(r.reshape(&[2, 3]).unwrap(), r);
        let big = Tensor::<f32>::new(&[4, 96], (0..384).map(|i| i as f32).collect()).unwrap();
        let flat = big.reshape(&[384]).unwrap();
        assert_eq!(flat.data()[96 * 3 + 17], big.at(&[3, 17]));
        assert!(v.reshape(&[4]).is_err());
    }

    #[test]
    fn finiteness_check() {
        assert!(t(&[2], &[1., 2.]).is_finite());
        assert!(!t(&[2], &[1., f32::NAN]).is_finite());
        assert!(!t(&[2], &[f32::INFINITY, 2.]).is_finite());
    }

    #[test]
    fn invalid_construction() {
        assert!(Tensor::<f32>::new(&[2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor::<f32>::new(&[0], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn reshape_round_trip_is_bitwise(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f32> = (0..rows * cols).map(|_| rng.gen()).collect();
            let a = t(&[rows, cols], &data);
            let back = a.reshape(&[rows * cols]).unwrap().reshape(&[rows, cols]).unwrap();
            prop_assert_eq!(a, back);
        }

        #[test]
        fn matmul_matches_oracle_up_to_16(m in 1usize..=16, k in 1usize..=16, n in 1usize..=16, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = Tensor::new(&[m, k], a.clone()).unwrap().matmul(&Tensor::new(&[k, n], b.clone()).unwrap()).unwrap();
            let oracle = naive_matmul(&a, &b, m, k, n);
            for (x, y) in c.data().iter().zip(&oracle) {
                prop_assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
            }
        }

        #[test]
        fn add_and_mul_commute_bitwise(seed in any::<u64>(), len in 1usize..32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f32> = (0..len).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let b: Vec<f32> = (0..len).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let (ta, tb) = (t(&[len], &a), t(&[len], &b));
            prop_assert_eq!(ta.add(&tb).unwrap(), tb.add(&ta).unwrap());
            prop_assert_eq!(ta.mul(&tb).unwrap(), tb.mul(&ta).unwrap());
        }
    }
}
