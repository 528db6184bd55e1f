//! Finite-difference helpers shared by the unit tests.

use rand::Rng;

use crate::tensor::Tensor;

pub const FD_EPS: f64 = 1e-4;

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Central differences of a scalar function with respect to every element of `at`.
pub fn central_difference(at: &Tensor<f64>, f: impl Fn(&Tensor<f64>) -> f64) -> Vec<f64> {
    let mut probe = at.clone();
    (0..at.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + FD_EPS;
            let up = f(&probe);
            probe.data_mut()[i] = orig - FD_EPS;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * FD_EPS)
        })
        .collect()
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&g, &n)| (g - n).abs() / g.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}
