//! Binary cross-entropy.

use crate::error::{Error, Result};

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` before the log.
pub const BCE_EPS: f64 = 1e-7;

fn check_label(y: u8) -> Result<f64> {
    match y {
        0 => Ok(0.0),
        1 => Ok(1.0),
        other => Err(Error::Validation(format!("label {other} is not 0 or 1"))),
    }
}

/// Loss and its derivative with respect to `p`, evaluated at the clamped probability.
pub fn bce_loss(p: f64, y: u8) -> Result<(f64, f64)> {
    let y = check_label(y)?;
    if !p.is_finite() {
        return Err(Error::Validation(format!("probability {p} is not finite")));
    }
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    let loss = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    let grad = (p - y) / (p * (1.0 - p));
    Ok((loss, grad))
}

/// Mean loss over a batch, and the gradient of that mean for each element.
pub fn bce_batch(p: &[f64], y: &[u8]) -> Result<(f64, Vec<f64>)> {
    if p.len() != y.len() || p.is_empty() {
        return Err(Error::Validation(format!(
            "bce batch needs equal non-empty lengths, got {} probabilities and {} labels",
            p.len(),
            y.len()
        )));
    }
    let n = p.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(p.len());
    for (&pi, &yi) in p.iter().zip(y) {
        let (l, g) = bce_loss(pi, yi)?;
        total += l;
        grads.push(g / n);
    }
    Ok((total / n, grads))
}
