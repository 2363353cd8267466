//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::ecoc::{train_ecoc, EcocModel};
use super::LabeledDataset;

#[derive(Debug, Clone)]
pub struct CvResult {
    /// Mean misclassification rate over the folds, in `[0, 1]`.
    pub mean_error: f64,
    pub fold_errors: Vec<f64>,
    /// Fold index of every sample.
    pub assignment: Vec<usize>,
    /// Model trained on everything outside each fold.
    pub models: Vec<EcocModel>,
}

/// Fold index for every sample. Each class is shuffled with `seed`, then the
/// classes are dealt out in turn round-robin, so every fold sees every class
/// it can and fold sizes differ by at most one.
pub fn fold_assignment(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = data.len();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; n];
    let mut next = 0;
    for class in data.classes() {
        let mut members: Vec<usize> = (0..n).filter(|&i| data.y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

/// Trains one model per fold on the other folds and tests it on the fold.
pub fn kfold_cv(data: &LabeledDataset, k: usize, c: f64, seed: u64) -> Result<CvResult> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let assignment = fold_assignment(data, k, seed)?;
    let mut fold_errors = Vec::with_capacity(k);
    let mut models = Vec::with_capacity(k);
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assignment[i] == fold);
        let model = train_ecoc(&data.subset(&train), c, seed.wrapping_add(fold as u64))?;
        let mut wrong = 0;
        for &i in &test {
            if model.predict(&data.x[i])? != data.y[i] {
                wrong += 1;
            }
        }
        fold_errors.push(wrong as f64 / test.len() as f64);
        models.push(model);
    }
    Ok(CvResult {
        mean_error: fold_errors.iter().sum::<f64>() / k as f64,
        fold_errors,
        assignment,
        models,
    })
}
