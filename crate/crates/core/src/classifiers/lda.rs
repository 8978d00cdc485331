//! Two-class linear discriminant analysis from prior-weighted scatter matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Prediction, Result};
use crate::table::ClassLabel;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LdaConfig {
    /// Diagonal loading added to the within-class scatter. `None` picks
    /// `1e-6 * trace(S_w) / d` (or `1e-6` when the trace is zero).
    pub ridge: Option<f64>,
}

/// Within/between-class scatter, class means and priors, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub within: DMatrix<f64>,
    pub between: DMatrix<f64>,
    pub means: [DVector<f64>; 2],
    pub priors: [f64; 2],
}

/// `S_w = sum_i P_i Cov_i` (covariances with divisor `N_i`) and
/// `S_b = sum_i P_i (M_i - M)(M_i - M)^T` with priors `P_i = N_i / N`.
pub fn lda_scatter(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<Scatter> {
    let d = x.first().map_or(0, Vec::len);
    let mut counts = [0usize; 2];
    let mut means = [DVector::zeros(d), DVector::zeros(d)];
    for (row, &label) in x.iter().zip(y) {
        counts[label.index()] += 1;
        means[label.index()] += DVector::from_column_slice(row);
    }
    if counts.contains(&0) {
        return Err(ClassifierError::DegenerateData);
    }
    for c in 0..2 {
        means[c] /= counts[c] as f64;
    }
    let n = x.len() as f64;
    let priors = [counts[0] as f64 / n, counts[1] as f64 / n];

    let mut within = DMatrix::zeros(d, d);
    for (row, &label) in x.iter().zip(y) {
        let c = label.index();
        let diff = DVector::from_column_slice(row) - &means[c];
        within += (&diff * diff.transpose()) * (priors[c] / counts[c] as f64);
    }
    let grand = &means[0] * priors[0] + &means[1] * priors[1];
    let mut between = DMatrix::zeros(d, d);
    for c in 0..2 {
        let diff = &means[c] - &grand;
        between += (&diff * diff.transpose()) * priors[c];
    }
    Ok(Scatter {
        within,
        between,
        means,
        priors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: [Vec<f64>; 2],
    pub priors: [f64; 2],
    pub within: Vec<Vec<f64>>,
    pub ridge: f64,
}

impl LdaModel {
    /// `w.x + b`; positive favours ASD.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_margin(self.decision(x))
    }
}

pub(super) fn fit(x: &[Vec<f64>], y: &[ClassLabel], config: &LdaConfig) -> Result<LdaModel> {
    let s = lda_scatter(x, y)?;
    let d = s.within.nrows();
    let ridge = match config.ridge {
        Some(r) => r,
        None => {
            let r = 1e-6 * s.within.trace() / d as f64;
            if r > 0.0 {
                r
            } else {
                1e-6
            }
        }
    };
    if ridge == 0.0 {
        let eig = s.within.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if max == 0.0 || min <= 1e-12 * max {
            return Err(ClassifierError::SingularScatter);
        }
    }
    let loaded = &s.within + DMatrix::identity(d, d) * ridge;
    let chol = loaded.cholesky().ok_or(ClassifierError::SingularScatter)?;
    let w = chol.solve(&(&s.means[1] - &s.means[0]));
    let midpoint = (&s.means[0] + &s.means[1]) * 0.5;
    let bias = -w.dot(&midpoint) + (s.priors[1] / s.priors[0]).ln();
    Ok(LdaModel {
        weights: w.iter().copied().collect(),
        bias,
        means: [
            s.means[0].iter().copied().collect(),
            s.means[1].iter().copied().collect(),
        ],
        priors: s.priors,
        within: s
            .within
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        ridge,
    })
}
