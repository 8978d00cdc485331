//! Inverse-distance-weighted k-nearest-neighbour vote.

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Prediction, Result};
use crate::table::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    pub k: usize,
}

impl KnnModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        knn_vote(&self.train, &self.labels, x, self.k)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `p(ASD | q)` from the `k` nearest rows weighted by `1 / d`. Distance ties
/// keep the lower row index. Any neighbour at distance zero decides outright
/// (majority among exact matches); the score is then 1 or 0.
pub fn knn_vote(
    train: &[Vec<f64>],
    labels: &[ClassLabel],
    query: &[f64],
    k: usize,
) -> Result<Prediction> {
    if k == 0 || k > train.len() {
        return Err(ClassifierError::KTooLarge { k, n: train.len() });
    }
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, row)| (euclidean(row, query), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &dist[..k];

    let exact: Vec<usize> = nearest.iter().filter(|(d, _)| *d == 0.0).map(|&(_, i)| i).collect();
    if !exact.is_empty() {
        let asd = exact.iter().filter(|&&i| labels[i] == ClassLabel::Asd).count();
        let score = if 2 * asd > exact.len() { 1.0 } else { 0.0 };
        return Ok(Prediction::from_probability(score));
    }
    let (mut asd, mut total) = (0.0, 0.0);
    for &(d, i) in nearest {
        let w = 1.0 / d;
        total += w;
        if labels[i] == ClassLabel::Asd {
            asd += w;
        }
    }
    Ok(Prediction::from_probability(asd / total))
}

/// Stores already-standardised rows.
pub(super) fn fit(x: Vec<Vec<f64>>, y: &[ClassLabel], config: &KnnConfig) -> Result<KnnModel> {
    if config.k > x.len() {
        return Err(ClassifierError::KTooLarge {
            k: config.k,
            n: x.len(),
        });
    }
    Ok(KnnModel {
        train: x,
        labels: y.to_vec(),
        k: config.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::clouds;
    use ClassLabel::{Asd, Control};

    #[test]
    fn unanimous_neighbourhood() {
        let train = vec![vec![0.0], vec![1.0], vec![3.0]];
        let p = knn_vote(&train, &[Asd; 3], &[10.0], 3).unwrap();
        assert_eq!(p.label, Asd);
        assert_eq!(p.score, 1.0);
    }

    #[test]
    fn weighted_vote() {
        // distances 1, 1, 2 with labels A, A, B
        let train = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 2.0], vec![9.0, 9.0]];
        let labels = [Control, Control, Asd, Asd];
        let p = knn_vote(&train, &labels, &[0.0, 0.0], 3).unwrap();
        assert!((1.0 - p.score - 0.8).abs() < 1e-15);
        assert_eq!(p.label, Control);
    }

    #[test]
    fn exact_match_wins() {
        let train = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1]];
        let labels = [Asd, Control, Control];
        let p = knn_vote(&train, &labels, &[0.0, 0.0], 3).unwrap();
        assert_eq!(p.label, Asd);
    }

    #[test]
    fn k_too_large() {
        assert!(matches!(
            knn_vote(&[vec![1.0]], &[Asd], &[0.0], 2),
            Err(ClassifierError::KTooLarge { k: 2, n: 1 })
        ));
    }

    #[test]
    fn equal_weights_tie_to_control() {
        let train = vec![vec![-1.0], vec![1.0]];
        let p = knn_vote(&train, &[Asd, Control], &[0.0], 2).unwrap();
        assert_eq!(p.score, 0.5);
        assert_eq!(p.label, Control);
    }

    #[test]
    fn one_neighbour_memorises_training_set() {
        let (x, y) = clouds(100, 3, 0.1, 77);
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(knn_vote(&x, &y, row, 1).unwrap().label, label);
        }
    }
}
