//! KPI telemetry datasets: ingestion, normalization, splitting, SMOTE and
//! exploratory statistics.

mod eda;
mod ingest;
mod normalize;
mod smote;
mod split;
pub mod synthetic;

pub use eda::{class_distribution, emit_eda, pearson_correlation, ClassDistribution, EdaReport};
pub use ingest::{load_csv, parse_csv, write_csv, SchemaConfig};
pub use normalize::{apply_norm, normalize, NormStats};
pub use smote::{smote, DEFAULT_K};
pub use split::{stratified_indices, stratified_split};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Column layout of a dataset after encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSchema {
    /// Post-encoding feature names, in column order.
    pub feature_names: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub label_column: String,
    pub timestamp_column: Option<String>,
}

impl DatasetSchema {
    /// Plain numeric schema, mainly for generated data.
    pub fn numeric(feature_names: Vec<String>, label_column: impl Into<String>) -> Self {
        Self {
            feature_names,
            categorical_columns: Vec::new(),
            label_column: label_column.into(),
            timestamp_column: None,
        }
    }

    /// FNV-1a-64 of the comma-joined post-encoding feature names.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(self.feature_names.join(",").as_bytes())
    }
}

/// Feature matrix `(N x F)`, binary labels and bookkeeping.
///
/// `norm_stats` is `None` for raw (encoded but unscaled) features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Tensor<f64>,
    labels: Vec<u8>,
    schema: DatasetSchema,
    norm_stats: Option<NormStats>,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(features: Tensor<f64>, labels: Vec<u8>, schema: DatasetSchema) -> Result<Self> {
        if features.rank() != 2 {
            return Err(Error::Data(format!("feature matrix must be 2-D, got {:?}", features.shape())));
        }
        if features.shape()[0] != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.shape()[0],
                labels.len()
            )));
        }
        if features.shape()[1] != schema.feature_names.len() {
            return Err(Error::Schema(format!(
                "{} feature columns but schema names {}",
                features.shape()[1],
                schema.feature_names.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Validation(format!("label {bad} is not 0 or 1")));
        }
        if !features.is_finite() {
            return Err(Error::Data("feature matrix contains NaN or infinite values".into()));
        }
        Ok(Self {
            features,
            labels,
            schema,
            norm_stats: None,
            dropped_rows: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn features(&self) -> &Tensor<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn norm_stats(&self) -> Option<&NormStats> {
        self.norm_stats.as_ref()
    }

    /// Rows discarded during ingestion.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub(crate) fn with_dropped_rows(mut self, dropped: usize) -> Self {
        self.dropped_rows = dropped;
        self
    }

    pub(crate) fn with_norm(mut self, features: Tensor<f64>, stats: NormStats) -> Self {
        self.features = features;
        self.norm_stats = Some(stats);
        self
    }

    /// Rows at `indices`, in that order. Normalization state is kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::Data("cannot take an empty subset".into()));
        }
        let f = self.feature_count();
        let mut data = Vec::with_capacity(indices.len() * f);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Dataset {
            features: Tensor::new(&[indices.len(), f], data)?,
            labels,
            schema: self.schema.clone(),
            norm_stats: self.norm_stats.clone(),
            dropped_rows: self.dropped_rows,
        })
    }

    /// Appends rows; used by SMOTE.
    pub(crate) fn extended(&self, rows: Vec<f64>, labels: Vec<u8>) -> Result<Dataset> {
        let f = self.feature_count();
        let n = self.len() + labels.len();
        let mut data = self.features.data().to_vec();
        data.extend(rows);
        let mut all_labels = self.labels.clone();
        all_labels.extend(labels);
        Ok(Dataset {
            features: Tensor::new(&[n, f], data)?,
            labels: all_labels,
            schema: self.schema.clone(),
            norm_stats: self.norm_stats.clone(),
            dropped_rows: self.dropped_rows,
        })
    }

    /// Features converted to the `f32` model precision, row-major.
    pub fn features_f32(&self) -> Tensor<f32> {
        self.features.cast()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        [self.len() - ones, ones]
    }
}
