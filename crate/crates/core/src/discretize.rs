//! Equal-frequency binning of continuous columns and bin × class contingency tables.

use serde::{Deserialize, Serialize};

use crate::table::ClassLabel;

/// Cut points for one column. Bin `b` holds values in `(cuts[b-1], cuts[b]]`;
/// the last bin is open to `+inf`, so a value equal to a cut goes to the lower bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub n_bins: usize,
    pub cuts: Vec<f64>,
}

impl BinningSpec {
    pub fn n_effective_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }
}

/// Equal-frequency cut points.
///
/// The `j`-th cut sits between order statistics `k-1` and `k` (0-based) with
/// `k = floor(j * n / n_bins)`, at their midpoint. Cuts that coincide or that
/// would leave the top bin empty are dropped.
pub fn fit_bins(column: &[f64], n_bins: usize) -> BinningSpec {
    assert!(!column.is_empty(), "cannot bin an empty column");
    assert!(n_bins >= 2, "need at least two bins");
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut cuts: Vec<f64> = Vec::with_capacity(n_bins - 1);
    for j in 1..n_bins {
        let k = j * n / n_bins;
        if k == 0 || k >= n {
            continue;
        }
        let cut = 0.5 * (sorted[k - 1] + sorted[k]);
        if cut >= max || cuts.last().is_some_and(|&last| cut <= last) {
            continue;
        }
        cuts.push(cut);
    }
    BinningSpec { n_bins, cuts }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContingencyError {
    #[error("column has {values} values but {labels} labels")]
    LengthMismatch { values: usize, labels: usize },
    #[error("contingency rows must all have the same number of classes")]
    Ragged,
}

/// Observed counts, rows = bins, columns = classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, ContingencyError> {
        let width = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != width) {
            return Err(ContingencyError::Ragged);
        }
        Ok(ContingencyTable { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn n_cols(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Per-bin totals.
    pub fn row_marginals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Per-class totals.
    pub fn col_marginals(&self) -> Vec<u64> {
        (0..self.n_cols())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn build_contingency(
    column: &[f64],
    labels: &[ClassLabel],
    spec: &BinningSpec,
) -> Result<ContingencyTable, ContingencyError> {
    if column.len() != labels.len() {
        return Err(ContingencyError::LengthMismatch {
            values: column.len(),
            labels: labels.len(),
        });
    }
    let mut counts = vec![vec![0u64; 2]; spec.n_effective_bins()];
    for (&x, &y) in column.iter().zip(labels) {
        counts[spec.bin_of(x)][y.index()] += 1;
    }
    Ok(ContingencyTable { counts })
}
