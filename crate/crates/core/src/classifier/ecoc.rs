//! One-vs-one coding with loss-weighted hinge decoding.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureVector};
use crate::fsio::write_atomic;
use crate::terrain::TerrainClass;

use super::svm::{train_binary_svm, BinaryLinearSvm};
use super::{LabeledDataset, Standardizer};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A binary learner separating `positive` (+1) from `negative` (-1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLearner {
    pub positive: TerrainClass,
    pub negative: TerrainClass,
    pub svm: BinaryLinearSvm,
}

/// Persisted as JSON; see [`EcocModel::save`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub version: u32,
    pub classes: Vec<TerrainClass>,
    pub mask: FeatureMask,
    /// Row per class, column per learner: +1, -1 or 0.
    pub coding: Vec<Vec<i8>>,
    pub learners: Vec<PairLearner>,
    pub standardizer: Standardizer,
    pub c: f64,
    pub seed: u64,
}

/// Fits the standardization on all of `data`, then one learner per class
/// pair `(i, j)`, `i < j`, with class `i` positive.
pub fn train_ecoc(data: &LabeledDataset, c: f64, seed: u64) -> Result<EcocModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    for &class in &classes {
        let count = data.count(class);
        if count < 2 {
            return Err(Error::InsufficientClassData {
                class: class.to_string(),
                count,
                required: 2,
            });
        }
    }
    let standardizer = Standardizer::fit(&data.x)?;
    let z: Vec<Vec<f64>> = data.x.iter().map(|r| standardizer.apply(r)).collect();

    let k = classes.len();
    let mut coding = vec![Vec::new(); k];
    let mut learners = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (pos, neg) = (classes[i], classes[j]);
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (row, &class) in z.iter().zip(&data.y) {
                if class == pos || class == neg {
                    x.push(row.clone());
                    y.push(if class == pos { 1.0 } else { -1.0 });
                }
            }
            let learner_seed = seed ^ ((learners.len() as u64) << 48);
            let (svm, _) = train_binary_svm(&x, &y, c, learner_seed)?;
            for (row, code) in coding.iter_mut().enumerate() {
                code.push(if row == i {
                    1
                } else if row == j {
                    -1
                } else {
                    0
                });
            }
            learners.push(PairLearner {
                positive: pos,
                negative: neg,
                svm,
            });
        }
    }
    Ok(EcocModel {
        version: MODEL_FORMAT_VERSION,
        classes,
        mask: data.mask,
        coding,
        learners,
        standardizer,
        c,
        seed,
    })
}

impl EcocModel {
    pub fn dim(&self) -> usize {
        self.standardizer.mean.len()
    }

    /// Decision values of every learner for raw input `x`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let z = self.standardizer.apply(x);
        Ok(self.learners.iter().map(|l| l.svm.decision(&z)).collect())
    }

    /// Average hinge loss of each class's code word against `scores`.
    pub fn class_losses(&self, scores: &[f64]) -> Vec<f64> {
        self.coding
            .iter()
            .map(|code| {
                let (mut loss, mut weight) = (0.0, 0.0);
                for (&m, &s) in code.iter().zip(scores) {
                    if m != 0 {
                        let m = f64::from(m);
                        loss += (1.0 - m * s).max(0.0) / 2.0;
                        weight += m.abs();
                    }
                }
                loss / weight
            })
            .collect()
    }

    /// Class with the smallest loss; ties go to the earlier class.
    pub fn predict(&self, x: &[f64]) -> Result<TerrainClass> {
        let losses = self.class_losses(&self.scores(x)?);
        let mut best = 0;
        for (k, &loss) in losses.iter().enumerate() {
            if loss < losses[best] {
                best = k;
            }
        }
        Ok(self.classes[best])
    }

    /// Predicts from a full feature vector, keeping the model's mask.
    pub fn predict_features(&self, features: &FeatureVector) -> Result<TerrainClass> {
        self.predict(&features.select(self.mask))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: EcocModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Version(model.version));
        }
        let k = model.classes.len();
        let l = model.learners.len();
        if k < 2 || l != k * (k - 1) / 2 || model.coding.len() != k || model.coding.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidArgument("model coding matrix does not match its learners".into()));
        }
        let dim = model.dim();
        if model.standardizer.std.len() != dim || model.learners.iter().any(|l| l.svm.weights.len() != dim) {
            return Err(Error::InvalidArgument("model dimensions are inconsistent".into()));
        }
        if dim != model.mask.len() {
            return Err(Error::Shape {
                expected: model.mask.len(),
                actual: dim,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?.into_bytes();
        text.push(b'\n');
        write_atomic(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
