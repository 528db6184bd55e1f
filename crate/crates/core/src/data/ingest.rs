use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetSchema};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Schema configuration as read from JSON. Every field is optional: by
/// default the label is the last column and every other column is a numeric
/// feature.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub timestamp_column: Option<String>,
}

impl SchemaConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Numeric,
    Categorical,
    Timestamp,
}

enum Cell {
    Num(f64),
    Cat(String),
    Time { hour: f64, dow: f64 },
}

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%d/%m/%Y %H:%M:%S",
    "%d/%m/%Y %H:%M",
];

/// Hour of day (fractional, minutes included) and day of week (Monday = 0).
/// Time-only values such as `10:45` carry no date and get day 0.
fn parse_timestamp(raw: &str) -> Option<(f64, f64)> {
    let hour = |t: NaiveTime| t.hour() as f64 + t.minute() as f64 / 60.0;
    for fmt in DATETIME_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some((hour(dt.time()), dt.weekday().num_days_from_monday() as f64));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some((0.0, d.weekday().num_days_from_monday() as f64));
    }
    for fmt in ["%H:%M:%S", "%H:%M"] {
        if let Ok(t) = NaiveTime::parse_from_str(raw, fmt) {
            return Some((hour(t), 0.0));
        }
    }
    None
}

fn parse_label(raw: &str) -> Option<u8> {
    match raw.parse::<f64>() {
        Ok(0.0) => Some(0),
        Ok(1.0) => Some(1),
        _ => None,
    }
}

/// Reads a KPI CSV file. See [`parse_csv`].
pub fn load_csv(path: &Path, config: &SchemaConfig) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, config)
}

/// Parses comma-separated telemetry with a header row.
///
/// Categorical columns are one-hot encoded with categories in order of first
/// appearance; a timestamp column becomes hour-of-day and day-of-week.
/// Rows with the wrong field count, an unparseable value or a label outside
/// {0, 1} are dropped and counted.
pub fn parse_csv<R: Read>(reader: R, config: &SchemaConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Schema("CSV has no header row".into()));
    }
    let position: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let find = |name: &str, role: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("{role} column '{name}' not found in CSV header")))
    };

    let label_name = config
        .label_column
        .clone()
        .unwrap_or_else(|| header.last().cloned().unwrap_or_default());
    let label_idx = find(&label_name, "label")?;

    let mut feature_names: Vec<String> = match &config.feature_columns {
        Some(cols) => cols.clone(),
        None => header.iter().filter(|h| **h != label_name).cloned().collect(),
    };
    if let Some(ts) = &config.timestamp_column {
        if !feature_names.contains(ts) {
            feature_names.insert(0, ts.clone());
        }
    }
    if feature_names.contains(&label_name) {
        return Err(Error::Schema(format!("label column '{label_name}' is also listed as a feature")));
    }
    if feature_names.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    for cat in &config.categorical_columns {
        if !feature_names.contains(cat) {
            return Err(Error::Schema(format!("categorical column '{cat}' is not a feature column")));
        }
    }

    let columns: Vec<(usize, ColumnKind)> = feature_names
        .iter()
        .map(|name| {
            let kind = if config.timestamp_column.as_deref() == Some(name) {
                ColumnKind::Timestamp
            } else if config.categorical_columns.contains(name) {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            };
            Ok((find(name, "feature")?, kind))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<(Vec<Cell>, u8)> = Vec::new();
    let mut dropped = 0usize;
    for record in rdr.records() {
        let record = match record {
            Ok(r) if r.len() == header.len() => r,
            Ok(_) => {
                dropped += 1;
                continue;
            }
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        let Some(label) = parse_label(&record[label_idx]) else {
            dropped += 1;
            continue;
        };
        let cells: Option<Vec<Cell>> = columns
            .iter()
            .map(|&(idx, kind)| {
                let raw = &record[idx];
                match kind {
                    ColumnKind::Numeric => raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(Cell::Num),
                    ColumnKind::Categorical => Some(Cell::Cat(raw.to_string())),
                    ColumnKind::Timestamp => parse_timestamp(raw).map(|(hour, dow)| Cell::Time { hour, dow }),
                }
            })
            .collect();
        match cells {
            Some(cells) => rows.push((cells, label)),
            None => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("no usable rows ({dropped} dropped)")));
    }

    // Category vocabularies in first-appearance order, per column.
    let mut vocab: Vec<Vec<String>> = vec![Vec::new(); columns.len()];
    for (cells, _) in &rows {
        for (c, cell) in cells.iter().enumerate() {
            if let Cell::Cat(v) = cell {
                if !vocab[c].contains(v) {
                    vocab[c].push(v.clone());
                }
            }
        }
    }

    let mut encoded_names = Vec::new();
    for (c, (name, &(_, kind))) in feature_names.iter().zip(&columns).enumerate() {
        match kind {
            ColumnKind::Numeric => encoded_names.push(name.clone()),
            ColumnKind::Categorical => encoded_names.extend(vocab[c].iter().map(|v| format!("{name}={v}"))),
            ColumnKind::Timestamp => {
                encoded_names.push(format!("{name}.hour"));
                encoded_names.push(format!("{name}.dow"));
            }
        }
    }

    let width = encoded_names.len();
    let mut data = Vec::with_capacity(rows.len() * width);
    let mut labels = Vec::with_capacity(rows.len());
    for (cells, label) in &rows {
        for (c, cell) in cells.iter().enumerate() {
            match cell {
                Cell::Num(v) => data.push(*v),
                Cell::Cat(v) => data.extend(vocab[c].iter().map(|cat| if cat == v { 1.0 } else { 0.0 })),
                Cell::Time { hour, dow } => {
                    data.push(*hour);
                    data.push(*dow);
                }
            }
        }
        labels.push(*label);
    }

    let schema = DatasetSchema {
        feature_names: encoded_names,
        categorical_columns: config.categorical_columns.clone(),
        label_column: label_name,
        timestamp_column: config.timestamp_column.clone(),
    };
    let features = Tensor::new(&[rows.len(), width], data)?;
    Ok(Dataset::new(features, labels, schema)?.with_dropped_rows(dropped))
}

/// Writes encoded features plus the label column as CSV.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    text.push_str(&ds.schema().feature_names.join(","));
    text.push(',');
    text.push_str(&ds.schema().label_column);
    text.push('\n');
    for i in 0..ds.len() {
        for v in ds.row(i) {
            text.push_str(&v.to_string());
            text.push(',');
        }
        text.push_str(&ds.labels()[i].to_string());
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, config: &SchemaConfig) -> Result<Dataset> {
        parse_csv(text.as_bytes(), config)
    }

    #[test]
    fn three_rows_two_features() {
        let ds = parse("a,b,label\n1,2,0\n3,4,1\n5,6,0\n", &SchemaConfig::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.feature_count(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.dropped_rows(), 0);
    }

    #[test]
    fn one_hot_in_first_appearance_order() {
        let config = SchemaConfig {
            categorical_columns: vec!["cell".into()],
            ..Default::default()
        };
        let ds = parse("cell,label\nx,0\ny,1\nx,0\n", &config).unwrap();
        assert_eq!(ds.schema().feature_names, vec!["cell=x", "cell=y"]);
        assert_eq!(ds.features().data(), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn bad_label_row_is_dropped() {
        let ds = parse("a,label\n1,0\n2,2\n3,1\n", &SchemaConfig::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dropped_rows(), 1);
    }

    #[test]
    fn malformed_rows_counted() {
        let ds = parse("a,b,label\n1,x,0\n1,2\n1,2,1\n,2,0\n", &SchemaConfig::default()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dropped_rows(), 3);
    }

    #[test]
    fn missing_label_column_names_it() {
        let config = SchemaConfig {
            label_column: Some("Unusual".into()),
            ..Default::default()
        };
        let err = parse("a,b\n1,2\n", &config).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        assert!(err.to_string().contains("Unusual"));
    }

    #[test]
    fn empty_after_drops_is_data_error() {
        let err = parse("a,label\nx,0\n", &SchemaConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn timestamp_becomes_hour_and_weekday() {
        let config = SchemaConfig {
            timestamp_column: Some("Time".into()),
            ..Default::default()
        };
        // 2024-01-01 is a Monday.
        let ds = parse("Time,kpi,label\n2024-01-03 10:45,1.5,0\n10:15,2.0,1\n", &config).unwrap();
        assert_eq!(ds.schema().feature_names, vec!["Time.hour", "Time.dow", "kpi"]);
        assert_eq!(ds.row(0), &[10.75, 2.0, 1.5]);
        assert_eq!(ds.row(1), &[10.25, 0.0, 2.0]);
    }

    #[test]
    fn explicit_feature_subset_and_label() {
        let config = SchemaConfig {
            feature_columns: Some(vec!["c".into(), "a".into()]),
            label_column: Some("y".into()),
            ..Default::default()
        };
        let ds = parse("a,y,b,c\n1,1,2,3\n4,0,5,6\n", &config).unwrap();
        assert_eq!(ds.schema().feature_names, vec!["c", "a"]);
        assert_eq!(ds.row(0), &[3.0, 1.0]);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn schema_json_parses_and_rejects_unknown_fields() {
        let c: SchemaConfig =
            serde_json::from_str(r#"{"categorical_columns": ["CellName"], "label_column": "Unusual", "timestamp_column": "Time"}"#).unwrap();
        assert_eq!(c.feature_columns, None);
        assert_eq!(c.label_column.as_deref(), Some("Unusual"));
        assert!(serde_json::from_str::<SchemaConfig>(r#"{"labels": "x"}"#).is_err());
    }

    #[test]
    fn categorical_must_be_a_feature() {
        let config = SchemaConfig {
            categorical_columns: vec!["label".into()],
            ..Default::default()
        };
        assert!(matches!(parse("a,label\n1,0\n", &config), Err(Error::Schema(_))));
    }

    #[test]
    fn write_then_parse_round_trip() {
        let ds = parse("a,b,label\n1.5,2,0\n-3,4e-3,1\n", &SchemaConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, &SchemaConfig::default()).unwrap();
        assert_eq!(back, ds);
    }
}
