//! Confusion matrix and the per-class classification report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts, class 0 = Normal, 1 = Anomaly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// The same counts with the class labels swapped.
    pub fn transposed_classes(&self) -> Self {
        Self {
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
            tp: self.tn,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix { tn: 0, fp: 0, fn_: 0, tp: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            (1, 1) => cm.tp += 1,
            _ => return Err(Error::Validation(format!("labels must be 0 or 1, got ({t}, {p})"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when a zero denominator forced a metric to 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classes {
    pub normal: ClassMetrics,
    pub anomaly: ClassMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub classes: Classes,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn class_metrics(tp: u64, fp: u64, fn_: u64) -> ClassMetrics {
    let (precision, p_undef) = ratio(tp, tp + fp);
    let (recall, r_undef) = ratio(tp, tp + fn_);
    let (f1, f_undef) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), false)
    } else {
        (0.0, true)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
        undefined: p_undef || r_undef || f_undef,
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation("cannot report on an empty confusion matrix".into()));
    }
    Ok(EvalReport {
        accuracy: (cm.tn + cm.tp) as f64 / total as f64,
        classes: Classes {
            normal: class_metrics(cm.tn, cm.fn_, cm.fp),
            anomaly: class_metrics(cm.tp, cm.fp, cm.fn_),
        },
        confusion: *cm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Integer percent, rounded half up.
pub fn percent(v: f64) -> u64 {
    (v * 100.0 + 0.5).floor() as u64
}

pub fn format_report(r: &EvalReport, kind: ReportFormat) -> String {
    match kind {
        ReportFormat::Json => serde_json::to_string_pretty(r).expect("report serializes"),
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<10} {:>13} {:>10} {:>12} {:>9}\n",
                "Labels", "Precision (%)", "Recall (%)", "F1-score (%)", "Support"
            ));
            for (name, m) in [("Normal", &r.classes.normal), ("Anomaly", &r.classes.anomaly)] {
                let mark = if m.undefined { " *" } else { "" };
                out.push_str(&format!(
                    "{:<10} {:>12}% {:>9}% {:>11}% {:>9}{mark}\n",
                    name,
                    percent(m.precision),
                    percent(m.recall),
                    percent(m.f1),
                    m.support
                ));
            }
            out.push_str(&format!("{:<10} {:>12}% {:>10} {:>12}\n", "Accuracy", percent(r.accuracy), "Total", r.confusion.total()));
            let c = &r.confusion;
            out.push_str(&format!("confusion: tn={} fp={} fn={} tp={}\n", c.tn, c.fp, c.fn_, c.tp));
            if r.classes.normal.undefined || r.classes.anomaly.undefined {
                out.push_str("* zero denominator: metric reported as 0\n");
            }
            out
        }
    }
}
