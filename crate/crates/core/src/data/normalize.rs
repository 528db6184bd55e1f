use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Columns whose population std falls below this are only centered.
pub const MIN_STD: f64 = 1e-12;

/// Per-column z-score statistics. Values are kept at `f32` precision so a
/// checkpoint round-trip reproduces them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(features: &Tensor<f64>) -> Result<Self> {
        if features.rank() != 2 {
            return Err(Error::dim(format!("expected (N x F) features, got {:?}", features.shape())));
        }
        let (n, f) = (features.shape()[0], features.shape()[1]);
        let mut mean = vec![0.0; f];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(features.row(i)) {
                *m += v;
            }
        }
        let mean: Vec<f64> = mean.iter().map(|m| (m / n as f64) as f32 as f64).collect();
        let mut var = vec![0.0; f];
        for i in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(features.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd < MIN_STD {
                    0.0
                } else {
                    sd as f32 as f64
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn from_f32(mean: &[f32], std: &[f32]) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Schema("normalization mean/std lengths differ".into()));
        }
        Ok(Self {
            mean: mean.iter().map(|&v| v as f64).collect(),
            std: std.iter().map(|&v| v as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, features: &Tensor<f64>) -> Result<Tensor<f64>> {
        if features.rank() != 2 || features.shape()[1] != self.len() {
            return Err(Error::Schema(format!(
                "normalization statistics cover {} features, data has shape {:?}",
                self.len(),
                features.shape()
            )));
        }
        let f = self.len();
        let data = features
            .data()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let c = k % f;
                let centered = v - self.mean[c];
                if self.std[c] < MIN_STD {
                    centered
                } else {
                    centered / self.std[c]
                }
            })
            .collect();
        Tensor::new(features.shape(), data)
    }
}

/// Fits statistics on `train` (raw features) and returns the normalized copy.
pub fn normalize(train: &Dataset) -> Result<(Dataset, NormStats)> {
    let stats = NormStats::fit(train.features())?;
    let ds = apply_norm(&stats, train)?;
    Ok((ds, stats))
}

/// Normalizes raw features with previously fitted statistics.
pub fn apply_norm(stats: &NormStats, ds: &Dataset) -> Result<Dataset> {
    if ds.norm_stats().is_some() {
        return Err(Error::Usage("dataset is already normalized".into()));
    }
    let x = stats.apply(ds.features())?;
    Ok(ds.clone().with_norm(x, stats.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetSchema;

    fn ds(cols: usize, data: Vec<f64>) -> Dataset {
        let n = data.len() / cols;
        let names = (0..cols).map(|c| format!("f{c}")).collect();
        Dataset::new(Tensor::new(&[n, cols], data).unwrap(), vec![0; n], DatasetSchema::numeric(names, "y")).unwrap()
    }

    #[test]
    fn two_point_z_score() {
        let (out, stats) = normalize(&ds(1, vec![2.0, 4.0])).unwrap();
        assert_eq!(stats.mean, vec![3.0]);
        assert_eq!(stats.std, vec![1.0]);
        assert_eq!(out.features().data(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_is_centered_only() {
        let (out, stats) = normalize(&ds(1, vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(stats.std, vec![0.0]);
        assert_eq!(out.features().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn mismatched_width_is_schema_error() {
        let (_, stats) = normalize(&ds(2, vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(matches!(apply_norm(&stats, &ds(1, vec![1.0, 2.0])), Err(Error::Schema(_))));
    }

    #[test]
    fn normalized_columns_are_standard() {
        let data: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 * 3.7 + 1000.0 * (i % 3) as f64).collect();
        let (out, _) = normalize(&ds(3, data)).unwrap();
        let x = out.features();
        let n = x.shape()[0] as f64;
        for c in 0..3 {
            let col: Vec<f64> = (0..x.shape()[0]).map(|i| x.at(&[i, c])).collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-5, "{mean}");
            assert!((sd - 1.0).abs() < 1e-5, "{sd}");
        }
    }

    #[test]
    fn stats_survive_f32_round_trip() {
        let (_, stats) = normalize(&ds(2, vec![0.1, 7.3, 0.7, 1.9, 0.35, -2.2])).unwrap();
        let m: Vec<f32> = stats.mean.iter().map(|&v| v as f32).collect();
        let s: Vec<f32> = stats.std.iter().map(|&v| v as f32).collect();
        assert_eq!(NormStats::from_f32(&m, &s).unwrap(), stats);
    }
}
