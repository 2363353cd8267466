//! Binary soft-margin linear SVM.
//!
//! The bias is handled as an extra constant feature, so the dual is a box
//! constrained QP
//!
//! ```text
//! min_a  1/2 a^T Q a - sum(a),   0 <= a_i <= C,   Q_ij = y_i y_j (x_i . x_j + 1)
//! ```
//!
//! solved by dual coordinate descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Stop when the spread of the projected gradient falls below this.
pub const KKT_TOLERANCE: f64 = 1e-6;
pub const MAX_EPOCHS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl BinaryLinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// `+1` when the decision value is non-negative, else `-1`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveInfo {
    pub alpha: Vec<f64>,
    pub epochs: usize,
    /// Projected-gradient spread at exit.
    pub violation: f64,
    /// Dual objective `1/2 a^T Q a - sum(a)` at exit.
    pub objective: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on rows `x` with labels `y` in `{-1, +1}`. `seed` fixes the
/// coordinate visiting order.
pub fn train_binary_svm(x: &[Vec<f64>], y: &[f64], c: f64, seed: u64) -> Result<(BinaryLinearSvm, SolveInfo)> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(invalid("labels must be -1 or +1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::DegenerateLabels);
    }
    let dim = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: row.len(),
        });
    }

    let n = x.len();
    let q_diag: Vec<f64> = x.iter().map(|r| dot(r, r) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    // w over the augmented features; the last entry is the bias.
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut epochs = 0;
    let mut violation = f64::INFINITY;

    while epochs < MAX_EPOCHS {
        epochs += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * (dot(&w[..dim], &x[i]) + w[dim]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    for (wk, xk) in w[..dim].iter_mut().zip(&x[i]) {
                        *wk += step * xk;
                    }
                    w[dim] += step;
                }
            }
        }
        violation = pg_max - pg_min;
        if violation < KKT_TOLERANCE {
            break;
        }
    }

    let objective = 0.5 * dot(&w, &w) - alpha.iter().sum::<f64>();
    let bias = w.pop().expect("augmented weight");
    Ok((
        BinaryLinearSvm { weights: w, bias, c },
        SolveInfo {
            alpha,
            epochs,
            violation,
            objective,
        },
    ))
}
