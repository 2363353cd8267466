//! Terrain classification with a one-vs-one error-correcting output code
//! ensemble of linear SVMs.

mod cv;
mod ecoc;
mod metrics;
mod svm;

pub use cv::{fold_assignment, kfold_cv, CvResult};
pub use ecoc::{train_ecoc, EcocModel, PairLearner, MODEL_FORMAT_VERSION};
pub use metrics::{evaluate, ClassMetrics, EvaluationReport};
pub use svm::{train_binary_svm, BinaryLinearSvm, SolveInfo, KKT_TOLERANCE, MAX_EPOCHS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureVector};
use crate::terrain::TerrainClass;

/// Regularization used when none is configured.
pub const DEFAULT_C: f64 = 1.0;
const STD_FLOOR: f64 = 1e-12;

/// A full feature vector with its class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub class: TerrainClass,
}

/// Masked feature rows with their classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub mask: FeatureMask,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<TerrainClass>,
}

impl LabeledDataset {
    pub fn new(mask: FeatureMask, x: Vec<Vec<f64>>, y: Vec<TerrainClass>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape {
                expected: x.len(),
                actual: y.len(),
            });
        }
        let dim = x.first().map_or(mask.len(), Vec::len);
        if let Some(row) = x.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape {
                expected: dim,
                actual: row.len(),
            });
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature values must be finite".into()));
        }
        Ok(Self { mask, x, y })
    }

    pub fn from_samples(samples: &[LabeledSample], mask: FeatureMask) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::InvalidArgument("feature mask selects nothing".into()));
        }
        Self::new(
            mask,
            samples.iter().map(|s| s.features.select(mask)).collect(),
            samples.iter().map(|s| s.class).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Classes present, in enumeration order.
    pub fn classes(&self) -> Vec<TerrainClass> {
        let mut present: Vec<TerrainClass> = self.y.clone();
        present.sort();
        present.dedup();
        present
    }

    pub fn count(&self, class: TerrainClass) -> usize {
        self.y.iter().filter(|&&c| c == class).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            mask: self.mask,
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Per-feature z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of each column; the standard
    /// deviation is floored at 1e-12.
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let first = x.first().ok_or(Error::EmptyDataset)?;
        let dim = first.len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}
