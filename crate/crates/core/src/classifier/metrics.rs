//! Confusion counts and per-class one-vs-rest metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::terrain::TerrainClass;

use super::ecoc::EcocModel;
use super::LabeledDataset;

/// One-vs-rest metrics for one class, in percent. `None` marks a metric
/// whose denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: TerrainClass,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classes: Vec<TerrainClass>,
    /// `confusion[predicted][target]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    /// Percentage of correct predictions.
    pub overall: Option<f64>,
    pub total: usize,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl EvaluationReport {
    /// Builds the report from a square matrix indexed `[predicted][target]`.
    pub fn from_confusion(classes: Vec<TerrainClass>, confusion: Vec<Vec<usize>>) -> Result<Self> {
        let k = classes.len();
        if confusion.len() != k {
            return Err(Error::Shape {
                expected: k,
                actual: confusion.len(),
            });
        }
        if let Some(row) = confusion.iter().find(|r| r.len() != k) {
            return Err(Error::Shape {
                expected: k,
                actual: row.len(),
            });
        }
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
        let per_class = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let predicted: usize = confusion[c].iter().sum();
                let actual: usize = confusion.iter().map(|r| r[c]).sum();
                let fp = predicted - tp;
                let fn_ = actual - tp;
                let tn = total - tp - fp - fn_;
                let absent = tp + fp + fn_ == 0;
                let recall = percent(tp, tp + fn_);
                let precision = percent(tp, tp + fp);
                let f1 = match (precision, recall) {
                    (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                    (Some(_), Some(_)) => Some(0.0),
                    _ => None,
                };
                ClassMetrics {
                    class: classes[c],
                    tp,
                    fp,
                    fn_,
                    tn,
                    recall,
                    specificity: if absent { None } else { percent(tn, tn + fp) },
                    precision,
                    accuracy: if absent { None } else { percent(tp + tn, total) },
                    f1,
                }
            })
            .collect();
        Ok(Self {
            classes,
            confusion,
            per_class,
            overall: percent(correct, total),
            total,
        })
    }

    /// Report over all four classes from paired predictions and targets.
    pub fn from_predictions(predicted: &[TerrainClass], target: &[TerrainClass]) -> Result<Self> {
        if predicted.len() != target.len() {
            return Err(Error::Shape {
                expected: target.len(),
                actual: predicted.len(),
            });
        }
        let k = TerrainClass::ALL.len();
        let mut confusion = vec![vec![0; k]; k];
        for (p, t) in predicted.iter().zip(target) {
            confusion[p.index()][t.index()] += 1;
        }
        Self::from_confusion(TerrainClass::ALL.to_vec(), confusion)
    }

    pub fn metrics(&self, class: TerrainClass) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.class == class)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned table with one decimal place, followed by the confusion matrix.
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20}{:>10}{:>13}{:>11}{:>10}{:>8}",
            "Class", "Recall", "Specificity", "Precision", "Accuracy", "F1"
        );
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<20}{:>10}{:>13}{:>11}{:>10}{:>8}",
                m.class.display_name(),
                fmt(m.recall),
                fmt(m.specificity),
                fmt(m.precision),
                fmt(m.accuracy),
                fmt(m.f1)
            );
        }
        let _ = writeln!(out, "\nCorrect predictions: {}% of {}", fmt(self.overall), self.total);
        let _ = writeln!(out, "\nConfusion (rows predicted, columns target):");
        let _ = write!(out, "{:<20}", "");
        for c in &self.classes {
            let _ = write!(out, "{:>12}", c.slug());
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(out, "{:<20}", c.slug());
            for v in row {
                let _ = write!(out, "{v:>12}");
            }
            out.push('\n');
        }
        out
    }
}

/// Predicts every row of `data` and tabulates against its labels.
pub fn evaluate(model: &EcocModel, data: &LabeledDataset) -> Result<EvaluationReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if model.mask != data.mask {
        return Err(Error::InvalidArgument(format!(
            "model uses features `{}` but the data has `{}`",
            model.mask, data.mask
        )));
    }
    let predicted = data.x.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>>>()?;
    EvaluationReport::from_predictions(&predicted, &data.y)
}
