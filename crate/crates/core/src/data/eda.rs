use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::Dataset;
use crate::error::{Error, Result};
use crate::svg;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistribution {
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub fractions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdaReport {
    pub feature_names: Vec<String>,
    pub class_distribution: ClassDistribution,
    /// F x F Pearson coefficients.
    pub correlation: Vec<Vec<f64>>,
    pub dropped_row_count: usize,
}

impl EdaReport {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        Ok(Self {
            feature_names: ds.schema().feature_names.clone(),
            class_distribution: class_distribution(ds),
            correlation: pearson_correlation(ds.features())?,
            dropped_row_count: ds.dropped_rows(),
        })
    }
}

pub fn class_distribution(ds: &Dataset) -> ClassDistribution {
    let counts = ds.class_counts();
    let total = ds.len();
    ClassDistribution {
        total,
        counts: [("0".to_string(), counts[0]), ("1".to_string(), counts[1])].into(),
        fractions: [
            ("0".to_string(), counts[0] as f64 / total as f64),
            ("1".to_string(), counts[1] as f64 / total as f64),
        ]
        .into(),
    }
}

/// Pearson correlation between every pair of columns, using population
/// moments. Pairs involving a constant column get 0 off the diagonal; the
/// diagonal is always 1.
pub fn pearson_correlation(features: &Tensor<f64>) -> Result<Vec<Vec<f64>>> {
    if features.rank() != 2 || features.shape()[0] < 2 {
        return Err(Error::Data(format!(
            "correlation needs at least 2 rows, got shape {:?}",
            features.shape()
        )));
    }
    let (n, f) = (features.shape()[0], features.shape()[1]);
    let mut mean = vec![0.0; f];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(features.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    // Co-moment sums, upper triangle.
    let mut s = vec![0.0; f * f];
    let mut centered = vec![0.0; f];
    for i in 0..n {
        for (c, (&v, &m)) in centered.iter_mut().zip(features.row(i).iter().zip(&mean)) {
            *c = v - m;
        }
        for a in 0..f {
            for b in a..f {
                s[a * f + b] += centered[a] * centered[b];
            }
        }
    }

    let mut r = vec![vec![0.0; f]; f];
    for a in 0..f {
        r[a][a] = 1.0;
        for b in a + 1..f {
            let (saa, sbb) = (s[a * f + a], s[b * f + b]);
            // Equal spreads: skip sqrt(s * s), which can be off by an ulp.
            let denom = if saa == sbb { saa } else { (saa * sbb).sqrt() };
            let v = if denom > 0.0 && s[a * f + a] > 0.0 && s[b * f + b] > 0.0 {
                (s[a * f + b] / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    Ok(r)
}

/// Writes `class_distribution.json`, `correlation.csv` and `correlation.svg`.
pub fn emit_eda(report: &EdaReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    #[derive(Serialize)]
    struct ClassFile<'a> {
        #[serde(flatten)]
        dist: &'a ClassDistribution,
        dropped_rows: usize,
    }
    let json = serde_json::to_string_pretty(&ClassFile {
        dist: &report.class_distribution,
        dropped_rows: report.dropped_row_count,
    })?;
    let path = out_dir.join("class_distribution.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    let mut csv = String::from("feature");
    for name in &report.feature_names {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for (name, row) in report.feature_names.iter().zip(&report.correlation) {
        csv.push_str(name);
        for v in row {
            csv.push(',');
            csv.push_str(&v.to_string());
        }
        csv.push('\n');
    }
    let path = out_dir.join("correlation.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let path = out_dir.join("correlation.svg");
    fs::write(&path, svg::heatmap(&report.feature_names, &report.correlation)).map_err(|e| Error::io(&path, e))?;
    Ok(())
}
