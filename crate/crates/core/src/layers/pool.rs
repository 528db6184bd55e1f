use super::check_dy;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Winning input position for every pooled output, as flat input indices.
#[derive(Debug)]
pub struct PoolCache {
    in_shape: [usize; 2],
    argmax: Vec<usize>,
}

/// Max pooling with window 2 and stride 2 over the time axis. A trailing odd
/// step is dropped; ties go to the earlier step.
pub fn maxpool1d_forward<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    if x.rank() != 2 || x.shape()[0] < 2 {
        return Err(Error::dim(format!(
            "maxpool1d needs a (T x C) input with T >= 2, got {:?}",
            x.shape()
        )));
    }
    let (steps, chans) = (x.shape()[0], x.shape()[1]);
    let out_steps = steps / 2;
    let mut y = Tensor::zeros(&[out_steps, chans]);
    let mut argmax = Vec::with_capacity(out_steps * chans);
    let xd = x.data();
    for t in 0..out_steps {
        for c in 0..chans {
            let a = (2 * t) * chans + c;
            let b = a + chans;
            let win = if xd[a] >= xd[b] { a } else { b };
            argmax.push(win);
            y.data_mut()[t * chans + c] = xd[win];
        }
    }
    Ok((
        y,
        PoolCache {
            in_shape: [steps, chans],
            argmax,
        },
    ))
}

pub fn maxpool1d_backward<T: Real>(cache: PoolCache, dy: &Tensor<T>) -> Result<Tensor<T>> {
    let [steps, chans] = cache.in_shape;
    check_dy("maxpool1d", &[steps / 2, chans], dy)?;
    let mut dx = Tensor::zeros(&cache.in_shape);
    for (&src, &g) in cache.argmax.iter().zip(dy.data()) {
        dx.data_mut()[src] = dx.data()[src] + g;
    }
    Ok(dx)
}
