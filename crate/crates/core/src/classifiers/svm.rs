//! Soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimisation on the maximal-violating pair.

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Prediction, Result};
use crate::table::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `1 / (d * Var(X))` over the standardised training matrix.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    /// Iteration budget in units of `n` pair updates.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_passes: 10,
        }
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// Dense symmetric Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn rbf(x: &[Vec<f64>], gamma: f64) -> Self {
        let n = x.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
            for j in 0..i {
                let k = rbf_kernel(&x[i], &x[j], gamma);
                data[i * n + j] = k;
                data[j * n + i] = k;
            }
        }
        KernelMatrix { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        KernelMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Solves the dual `min 1/2 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0`.
///
/// Stops once the maximal KKT violation drops below `tol`, or after
/// `max_passes * n` pair updates with `converged = false` and the current
/// iterate. The bias averages the free multipliers, or sits midway between
/// the violation bounds when none are free.
/// Rounding can leave an alpha a hair inside a bound, where it stays in the
/// working set but can barely move; pin it to the bound instead.
fn snap(a: f64, c: f64) -> f64 {
    let eps = 1e-12 * c;
    if a < eps {
        0.0
    } else if a > c - eps {
        c
    } else {
        a
    }
}

pub fn smo_fit(
    kernel: &KernelMatrix,
    y: &[f64],
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<SmoSolution> {
    let n = kernel.len();
    assert_eq!(y.len(), n, "one label per kernel row");
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(ClassifierError::DegenerateData);
    }
    let mut alpha = vec![0.0; n];
    // G = Q alpha - e
    let mut grad = vec![-1.0; n];
    let max_iter = max_passes.saturating_mul(n.max(1));
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (mut i, mut m_up) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut m_low) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m_up {
                i = t;
                m_up = v;
            }
            if in_low(alpha[t], y[t]) && v < m_low {
                j = t;
                m_low = v;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (yi, yj) = (y[i], y[j]);
        let (ai, aj) = (alpha[i], alpha[j]);
        let eta = (kernel.get(i, i) + kernel.get(j, j) - 2.0 * kernel.get(i, j)).max(1e-12);
        // prediction errors without bias: E_t = y_t * G_t
        let (ei, ej) = (yi * grad[i], yj * grad[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        let new_aj = snap((aj + yj * (ei - ej) / eta).clamp(lo, hi), c);
        let new_ai = snap((ai + yi * yj * (aj - new_aj)).clamp(0.0, c), c);
        let (di, dj) = (new_ai - ai, new_aj - aj);
        alpha[i] = new_ai;
        alpha[j] = new_aj;
        let (ki, kj) = (kernel.row(i), kernel.row(j));
        for t in 0..n {
            grad[t] += y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        }
    }

    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| -y[t] * grad[t])
        .collect();
    let bias = if free.is_empty() {
        let up = (0..n)
            .filter(|&t| in_up(alpha[t], y[t]))
            .map(|t| -y[t] * grad[t])
            .fold(f64::NEG_INFINITY, f64::max);
        let low = (0..n)
            .filter(|&t| in_low(alpha[t], y[t]))
            .map(|t| -y[t] * grad[t])
            .fold(f64::INFINITY, f64::min);
        match (up.is_finite(), low.is_finite()) {
            (true, true) => 0.5 * (up + low),
            (true, false) => up,
            (false, true) => low,
            (false, false) => 0.0,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    Ok(SmoSolution {
        alpha,
        bias,
        converged,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// +1 ASD, -1 control.
    pub labels: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub converged: bool,
}

impl SvmModel {
    /// `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.labels.iter().zip(&self.alphas))
            .map(|(sv, (y, a))| a * y * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_margin(self.decision(x))
    }
}

fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(1, Vec::len).max(1);
    let values: Vec<f64> = x.iter().flatten().copied().collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// Fits on already-standardised rows.
pub(super) fn fit(x: &[Vec<f64>], y: &[ClassLabel], config: &SvmConfig) -> Result<SvmModel> {
    let gamma = match config.gamma {
        Gamma::Scale => scale_gamma(x),
        Gamma::Value(g) => g,
    };
    let signs: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let kernel = KernelMatrix::rbf(x, gamma);
    let sol = smo_fit(&kernel, &signs, config.c, config.tol, config.max_passes)?;
    let keep: Vec<usize> = (0..x.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmModel {
        support_vectors: keep.iter().map(|&i| x[i].clone()).collect(),
        labels: keep.iter().map(|&i| signs[i]).collect(),
        alphas: keep.iter().map(|&i| sol.alpha[i]).collect(),
        bias: sol.bias,
        gamma,
        c: config.c,
        converged: sol.converged,
    })
}
