use super::check_dy;
use crate::error::{Error, Result};
use crate::tensor::{axpy, dot, Real, Tensor};

/// Forward intermediates of one 1-D convolution call.
#[derive(Debug)]
pub struct Conv1dCache<T> {
    input: Tensor<T>,
    out_shape: [usize; 2],
}

#[derive(Debug)]
pub struct Conv1dGrads<T> {
    pub dx: Tensor<T>,
    pub dkernel: Tensor<T>,
    pub dbias: Tensor<T>,
}

fn check_shapes<T: Real>(x: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>) -> Result<()> {
    if x.rank() != 2 || kernel.rank() != 3 || bias.rank() != 1 {
        return Err(Error::dim(format!(
            "conv1d expects x (T x C_in), kernel (K x C_in x C_out), bias (C_out); got {:?}, {:?}, {:?}",
            x.shape(),
            kernel.shape(),
            bias.shape()
        )));
    }
    let (k, c_in, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if k % 2 == 0 {
        return Err(Error::dim(format!("conv1d kernel size must be odd, got {k}")));
    }
    if x.shape()[1] != c_in {
        return Err(Error::dim(format!(
            "conv1d input has {} channels but kernel {:?} expects {c_in}",
            x.shape()[1],
            kernel.shape()
        )));
    }
    if bias.shape()[0] != c_out {
        return Err(Error::dim(format!(
            "conv1d bias {:?} does not match {c_out} output channels",
            bias.shape()
        )));
    }
    Ok(())
}

/// Stride-1 convolution over the time axis with zero "same" padding:
/// `y[t][o] = bias[o] + sum_{k,c} x[t + k - K/2][c] * kernel[k][c][o]`.
pub fn conv1d_forward<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, Conv1dCache<T>)> {
    check_shapes(x, kernel, bias)?;
    let steps = x.shape()[0];
    let (k, c_in, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    let half = k / 2;
    let kd = kernel.data();

    let mut y = Tensor::zeros(&[steps, c_out]);
    for t in 0..steps {
        let row = y.row_mut(t);
        row.copy_from_slice(bias.data());
        for kk in 0..k {
            let Some(src) = (t + kk).checked_sub(half).filter(|&s| s < steps) else {
                continue;
            };
            let xs = x.row(src);
            for (c, &xv) in xs.iter().enumerate() {
                let off = (kk * c_in + c) * c_out;
                axpy(xv, &kd[off..off + c_out], row);
            }
        }
    }
    let cache = Conv1dCache {
        input: x.clone(),
        out_shape: [steps, c_out],
    };
    Ok((y, cache))
}

pub fn conv1d_backward<T: Real>(
    cache: Conv1dCache<T>,
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<Conv1dGrads<T>> {
    check_dy("conv1d", &cache.out_shape, dy)?;
    let x = &cache.input;
    let steps = x.shape()[0];
    let (k, c_in, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if c_in != x.shape()[1] || c_out != cache.out_shape[1] {
        return Err(Error::Usage(format!(
            "conv1d backward: kernel {:?} does not match the cached forward call",
            kernel.shape()
        )));
    }
    let half = k / 2;
    let kd = kernel.data();

    let mut dx = Tensor::zeros(x.shape());
    let mut dkernel = Tensor::zeros(kernel.shape());
    let mut dbias = Tensor::zeros(&[c_out]);

    for t in 0..steps {
        let g = dy.row(t);
        axpy(T::one(), g, dbias.data_mut());
        for kk in 0..k {
            let Some(src) = (t + kk).checked_sub(half).filter(|&s| s < steps) else {
                continue;
            };
            for c in 0..c_in {
                let off = (kk * c_in + c) * c_out;
                let xv = x.row(src)[c];
                axpy(xv, g, &mut dkernel.data_mut()[off..off + c_out]);
                let back = dot(&kd[off..off + c_out], g);
                dx.row_mut(src)[c] = dx.row(src)[c] + back;
            }
        }
    }
    Ok(Conv1dGrads { dx, dkernel, dbias })
}
