use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Per-class proportional train/validation index split. Each class puts
/// `round(n_c * val_fraction)` rows (at least one, at most `n_c - 1`) into
/// validation. Both index lists come back sorted.
pub fn stratified_indices(labels: &[u8], val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "validation fraction must lie strictly between 0 and 1, got {val_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = labels.iter().enumerate().filter(|(_, &y)| y == class).map(|(i, _)| i).collect();
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class {class} has {} samples; stratified splitting needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_val = ((idx.len() as f64 * val_fraction).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

pub fn stratified_split(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, val) = stratified_indices(ds.labels(), val_fraction, seed)?;
    Ok((ds.subset(&train)?, ds.subset(&val)?))
}
