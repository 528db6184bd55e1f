//! Single-layer LSTM with gate packing `[input, forget, candidate, output]`
//! along the 4H axis of `W` (D x 4H), `U` (H x 4H) and `b` (4H).

use super::activation::{sigmoid, tanh_open};
use super::check_dy;
use crate::error::{Error, Result};
use crate::tensor::{axpy, mat_vec_acc, outer_acc, vec_mat_acc, Real, Tensor};

#[derive(Debug)]
pub struct LstmCache<T> {
    input: Tensor<T>,
    /// Activated gates per step, (T x 4H).
    gates: Vec<T>,
    /// Cell states c_0..c_T, ((T+1) x H); c_0 = 0.
    cells: Vec<T>,
    /// tanh(c_t) for t = 1..T, (T x H).
    cell_tanh: Vec<T>,
    /// Hidden states h_0..h_T, ((T+1) x H); h_0 = 0.
    hidden: Vec<T>,
    return_sequences: bool,
}

#[derive(Debug)]
pub struct LstmGrads<T> {
    pub dx: Tensor<T>,
    pub dw: Tensor<T>,
    pub du: Tensor<T>,
    pub db: Tensor<T>,
}

fn hidden_size<T: Real>(x: &Tensor<T>, w: &Tensor<T>, u: &Tensor<T>, b: &Tensor<T>) -> Result<usize> {
    let bad = || {
        Error::dim(format!(
            "lstm expects x (T x D), W (D x 4H), U (H x 4H), b (4H); got {:?}, {:?}, {:?}, {:?}",
            x.shape(),
            w.shape(),
            u.shape(),
            b.shape()
        ))
    };
    if x.rank() != 2 || w.rank() != 2 || u.rank() != 2 || b.rank() != 1 {
        return Err(bad());
    }
    let h = u.shape()[0];
    let g = 4 * h;
    if w.shape() != [x.shape()[1], g] || u.shape()[1] != g || b.len() != g {
        return Err(bad());
    }
    Ok(h)
}

pub fn lstm_forward<T: Real>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    u: &Tensor<T>,
    b: &Tensor<T>,
    return_sequences: bool,
) -> Result<(Tensor<T>, LstmCache<T>)> {
    let h = hidden_size(x, w, u, b)?;
    let steps = x.shape()[0];
    let g4 = 4 * h;
    let mut gates = vec![T::zero(); steps * g4];
    let mut cells = vec![T::zero(); (steps + 1) * h];
    let mut cell_tanh = vec![T::zero(); steps * h];
    let mut hidden = vec![T::zero(); (steps + 1) * h];

    for t in 0..steps {
        let z = &mut gates[t * g4..(t + 1) * g4];
        z.copy_from_slice(b.data());
        vec_mat_acc(x.row(t), w.data(), g4, z);
        vec_mat_acc(&hidden[t * h..(t + 1) * h], u.data(), g4, z);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if (2 * h..3 * h).contains(&k) {
                tanh_open(*v)
            } else {
                sigmoid(*v)
            };
        }
        for j in 0..h {
            let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
            let c = f * cells[t * h + j] + i * g;
            cells[(t + 1) * h + j] = c;
            let tc = tanh_open(c);
            cell_tanh[t * h + j] = tc;
            hidden[(t + 1) * h + j] = o * tc;
        }
    }

    let y = if return_sequences {
        Tensor::new(&[steps, h], hidden[h..].to_vec())?
    } else {
        Tensor::new(&[h], hidden[steps * h..].to_vec())?
    };
    let cache = LstmCache {
        input: x.clone(),
        gates,
        cells,
        cell_tanh,
        hidden,
        return_sequences,
    };
    Ok((y, cache))
}

/// Backpropagation through time for [`lstm_forward`].
pub fn lstm_backward<T: Real>(
    cache: LstmCache<T>,
    w: &Tensor<T>,
    u: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<LstmGrads<T>> {
    let x = &cache.input;
    let steps = x.shape()[0];
    let h = u.shape()[0];
    let g4 = 4 * h;
    if cache.gates.len() != steps * g4 || w.shape()[0] != x.shape()[1] {
        return Err(Error::Usage(
            "lstm backward: weights do not match the cached forward call".into(),
        ));
    }
    if cache.return_sequences {
        check_dy("lstm", &[steps, h], dy)?;
    } else {
        check_dy("lstm", &[h], dy)?;
    }

    let one = T::one();
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut du = Tensor::zeros(u.shape());
    let mut db = Tensor::zeros(&[g4]);
    let mut dh_next = vec![T::zero(); h];
    let mut dc_next = vec![T::zero(); h];
    let mut dz = vec![T::zero(); g4];
    let mut dh = vec![T::zero(); h];

    for t in (0..steps).rev() {
        dh.copy_from_slice(&dh_next);
        if cache.return_sequences {
            axpy(one, dy.row(t), &mut dh);
        } else if t + 1 == steps {
            axpy(one, dy.data(), &mut dh);
        }
        let z = &cache.gates[t * g4..(t + 1) * g4];
        for j in 0..h {
            let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
            let tc = cache.cell_tanh[t * h + j];
            let c_prev = cache.cells[t * h + j];
            let d_o = dh[j] * tc;
            let dc = dh[j] * o * (one - tc * tc) + dc_next[j];
            let d_i = dc * g;
            let d_g = dc * i;
            let d_f = dc * c_prev;
            dc_next[j] = dc * f;
            dz[j] = d_i * i * (one - i);
            dz[h + j] = d_f * f * (one - f);
            dz[2 * h + j] = d_g * (one - g * g);
            dz[3 * h + j] = d_o * o * (one - o);
        }
        axpy(one, &dz, db.data_mut());
        outer_acc(x.row(t), &dz, dw.data_mut());
        outer_acc(&cache.hidden[t * h..(t + 1) * h], &dz, du.data_mut());
        mat_vec_acc(w.data(), &dz, dx.row_mut(t));
        dh_next.iter_mut().for_each(|v| *v = T::zero());
        mat_vec_acc(u.data(), &dz, &mut dh_next);
    }
    Ok(LstmGrads { dx, dw, du, db })
}
