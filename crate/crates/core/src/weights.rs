//! Filter-style feature weighting: information gain, gain ratio, Pearson
//! chi-square and symmetrical uncertainty over binned features, followed by
//! min-max normalisation and threshold selection.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{build_contingency, fit_bins, ContingencyTable};
use crate::table::{ClassLabel, FeatureTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightError {
    #[error("entropy of an empty count vector")]
    EmptyCounts,
    #[error("feature weighting needs subjects of both classes")]
    SingleClass,
    #[error("n_bins must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("unknown weighting method `{0}` (expected ig, igr, chi2 or su)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightMethod {
    InfoGain,
    GainRatio,
    ChiSquare,
    SymUncertainty,
}

impl WeightMethod {
    pub const ALL: [WeightMethod; 4] = [
        WeightMethod::InfoGain,
        WeightMethod::GainRatio,
        WeightMethod::ChiSquare,
        WeightMethod::SymUncertainty,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            WeightMethod::InfoGain => "ig",
            WeightMethod::GainRatio => "igr",
            WeightMethod::ChiSquare => "chi2",
            WeightMethod::SymUncertainty => "su",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            WeightMethod::InfoGain => "Information gain",
            WeightMethod::GainRatio => "Information gain ratio",
            WeightMethod::ChiSquare => "Chi-square",
            WeightMethod::SymUncertainty => "Symmetrical uncertainty",
        }
    }

    pub fn score(self, ct: &ContingencyTable) -> f64 {
        match self {
            WeightMethod::InfoGain => information_gain(ct),
            WeightMethod::GainRatio => gain_ratio(ct),
            WeightMethod::ChiSquare => chi_square(ct),
            WeightMethod::SymUncertainty => symmetrical_uncertainty(ct),
        }
    }
}

impl fmt::Display for WeightMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for WeightMethod {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ig" | "info_gain" | "information_gain" => Ok(WeightMethod::InfoGain),
            "igr" | "gain_ratio" => Ok(WeightMethod::GainRatio),
            "chi2" | "chi_square" | "chisq" => Ok(WeightMethod::ChiSquare),
            "su" | "sym_uncertainty" | "symmetrical_uncertainty" => {
                Ok(WeightMethod::SymUncertainty)
            }
            _ => Err(WeightError::UnknownMethod(s.to_string())),
        }
    }
}

fn plogp_sum(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Shannon entropy in bits; `0 log 0 = 0`.
pub fn entropy(class_counts: &[u64]) -> Result<f64, WeightError> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(WeightError::EmptyCounts);
    }
    Ok(plogp_sum(class_counts.iter().copied(), total))
}

/// `H(labels) - sum_v (n_v / n) H(labels | bin v)`.
pub fn information_gain(ct: &ContingencyTable) -> f64 {
    let n = ct.total();
    if n == 0 {
        return 0.0;
    }
    let prior = plogp_sum(ct.col_marginals().into_iter(), n);
    let conditional: f64 = ct
        .counts()
        .iter()
        .map(|row| {
            let nv: u64 = row.iter().sum();
            if nv == 0 {
                0.0
            } else {
                nv as f64 / n as f64 * plogp_sum(row.iter().copied(), nv)
            }
        })
        .sum();
    (prior - conditional).max(0.0)
}

/// Entropy of the bin distribution (non-negative).
pub fn intrinsic_value(ct: &ContingencyTable) -> f64 {
    let n = ct.total();
    if n == 0 {
        return 0.0;
    }
    plogp_sum(ct.row_marginals().into_iter(), n)
}

/// `IG / IV`, defined as 0 for a single occupied bin.
pub fn gain_ratio(ct: &ContingencyTable) -> f64 {
    let iv = intrinsic_value(ct);
    if iv <= 0.0 {
        0.0
    } else {
        information_gain(ct) / iv
    }
}

/// Pearson statistic `sum (O - E)^2 / E` with `E = row * col / n`; empty
/// expected cells contribute nothing.
pub fn chi_square(ct: &ContingencyTable) -> f64 {
    let n = ct.total();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let rows = ct.row_marginals();
    let cols = ct.col_marginals();
    let mut stat = 0.0;
    for (row, &r) in ct.counts().iter().zip(&rows) {
        for (&o, &c) in row.iter().zip(&cols) {
            let e = r as f64 * c as f64 / n;
            if e > 0.0 {
                stat += (o as f64 - e).powi(2) / e;
            }
        }
    }
    stat
}

/// `2 IG / (H(bins) + H(labels))`, 0 when both entropies vanish.
pub fn symmetrical_uncertainty(ct: &ContingencyTable) -> f64 {
    let n = ct.total();
    if n == 0 {
        return 0.0;
    }
    let denom = intrinsic_value(ct) + plogp_sum(ct.col_marginals().into_iter(), n);
    if denom <= 0.0 {
        0.0
    } else {
        (2.0 * information_gain(ct) / denom).min(1.0)
    }
}

/// Per-feature scores of one method, with min-max normalised weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub method: WeightMethod,
    pub features: Vec<String>,
    pub raw: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    /// Normalises `raw` into `[0, 1]`; all weights are 0 when every score is equal.
    pub fn from_raw(method: WeightMethod, features: Vec<String>, raw: Vec<f64>) -> Self {
        assert_eq!(features.len(), raw.len());
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let weights = raw
            .iter()
            .map(|&r| {
                if span > 0.0 {
                    if r == max {
                        1.0
                    } else {
                        (r - min) / span
                    }
                } else {
                    0.0
                }
            })
            .collect();
        WeightVector {
            method,
            features,
            raw,
            weights,
        }
    }

    pub fn weight(&self, feature: &str) -> Option<f64> {
        self.features
            .iter()
            .position(|f| f == feature)
            .map(|i| self.weights[i])
    }

    /// Feature indices by descending weight, ties in feature order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.features.len()).collect();
        idx.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        idx
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("feature,raw,weight\n");
        for ((f, r), w) in self.features.iter().zip(&self.raw).zip(&self.weights) {
            out.push_str(&format!("{f},{r},{w}\n"));
        }
        out
    }
}

/// Scores every feature over the given rows.
pub fn weigh_rows(
    table: &FeatureTable,
    rows: &[usize],
    method: WeightMethod,
    n_bins: usize,
) -> Result<WeightVector, WeightError> {
    if n_bins < 2 {
        return Err(WeightError::TooFewBins(n_bins));
    }
    let labels: Vec<ClassLabel> = rows.iter().map(|&i| table.records()[i].label).collect();
    if !labels.contains(&ClassLabel::Asd) || !labels.contains(&ClassLabel::Control) {
        return Err(WeightError::SingleClass);
    }
    let raw: Vec<f64> = (0..table.n_features())
        .into_par_iter()
        .map(|j| {
            let column = table.column(j, rows);
            let spec = fit_bins(&column, n_bins);
            let ct = build_contingency(&column, &labels, &spec).expect("equal lengths");
            method.score(&ct)
        })
        .collect();
    Ok(WeightVector::from_raw(method, table.feature_names().to_vec(), raw))
}

/// Scores every feature over the whole table.
pub fn weigh_all(
    table: &FeatureTable,
    method: WeightMethod,
    n_bins: usize,
) -> Result<WeightVector, WeightError> {
    let rows: Vec<usize> = (0..table.len()).collect();
    weigh_rows(table, &rows, method, n_bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub threshold: f64,
    /// Descending weight, ties in feature order.
    pub selected: Vec<String>,
    /// Feature order.
    pub rejected: Vec<String>,
}

/// Keeps features whose normalised weight is at least `threshold`.
pub fn select_by_threshold(wv: &WeightVector, threshold: f64) -> SelectionResult {
    let selected = wv
        .ranking()
        .into_iter()
        .filter(|&i| wv.weights[i] >= threshold)
        .map(|i| wv.features[i].clone())
        .collect::<Vec<_>>();
    let rejected = wv
        .features
        .iter()
        .zip(&wv.weights)
        .filter(|(_, &w)| w < threshold)
        .map(|(f, _)| f.clone())
        .collect();
    SelectionResult {
        threshold,
        selected,
        rejected,
    }
}
