use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Concatenates two (T' x Ca) and (T' x Cb) branch outputs along the channel
/// axis. Row-major flattening of the result is the per-step `[a_t | b_t]`
/// fused vector.
pub fn fuse_branches<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.rank() != 2 || b.rank() != 2 || a.shape()[0] != b.shape()[0] {
        return Err(Error::dim(format!(
            "cannot fuse branches with shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (steps, ca, cb) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut out = Vec::with_capacity(steps * (ca + cb));
    for t in 0..steps {
        out.extend_from_slice(a.row(t));
        out.extend_from_slice(b.row(t));
    }
    Tensor::new(&[steps, ca + cb], out)
}

/// Adjoint of [`fuse_branches`]: splits a fused gradient by column range.
pub fn split_fused<T: Real>(d: &Tensor<T>, ca: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    if d.rank() != 2 || ca == 0 || ca >= d.shape()[1] {
        return Err(Error::dim(format!(
            "cannot split {:?} at column {ca}",
            d.shape()
        )));
    }
    let (steps, total) = (d.shape()[0], d.shape()[1]);
    let mut a = Vec::with_capacity(steps * ca);
    let mut b = Vec::with_capacity(steps * (total - ca));
    for t in 0..steps {
        let row = d.row(t);
        a.extend_from_slice(&row[..ca]);
        b.extend_from_slice(&row[ca..]);
    }
    Ok((
        Tensor::new(&[steps, ca], a)?,
        Tensor::new(&[steps, total - ca], b)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize], start: usize) -> Tensor<f32> {
        let n: usize = shape.iter().product();
        Tensor::new(shape, (start..start + n).map(|v| v as f32).collect()).unwrap()
    }

    #[test]
    fn single_step_concatenation() {
        let fused = fuse_branches(&seq(&[1, 32], 1), &seq(&[1, 64], 33)).unwrap();
        assert_eq!(fused.shape(), &[1, 96]);
        let expected: Vec<f32> = (1..=96).map(|v| v as f32).collect();
        assert_eq!(fused.data(), expected.as_slice());
    }

    #[test]
    fn flattened_layout_is_per_step_blocks() {
        let a = seq(&[4, 32], 0);
        let b = seq(&[4, 64], 1000);
        let fused = fuse_branches(&a, &b).unwrap();
        assert_eq!(fused.shape(), &[4, 96]);
        let flat = fused.reshape(&[384]).unwrap();
        let mut expected = Vec::new();
        for t in 0..4 {
            expected.extend_from_slice(a.row(t));
            expected.extend_from_slice(b.row(t));
        }
        assert_eq!(flat.data(), expected.as_slice());
    }

    #[test]
    fn split_is_exact_adjoint() {
        let a = seq(&[3, 32], 0);
        let b = seq(&[3, 64], 500);
        let (da, db) = split_fused(&fuse_branches(&a, &b).unwrap(), 32).unwrap();
        assert_eq!(da, a);
        assert_eq!(db, b);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            fuse_branches(&seq(&[3, 32], 0), &seq(&[4, 64], 0)),
            Err(Error::Dimension(_))
        ));
    }
}
