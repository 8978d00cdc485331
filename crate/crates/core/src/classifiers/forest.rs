//! Random forest of Gini-impurity CART trees on bootstrap samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::table::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 10,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { counts: [usize; 2] },
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Majority class of the reached leaf; ties go to control.
    pub fn predict_label(&self, x: &[f64]) -> ClassLabel {
        let [control, asd] = self.leaf_counts(x);
        if asd > control {
            ClassLabel::Asd
        } else {
            ClassLabel::Control
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn asd_votes(&self, x: &[f64]) -> usize {
        self.trees
            .iter()
            .filter(|t| t.predict_label(x) == ClassLabel::Asd)
            .count()
    }

    /// Score is the ASD vote share; a split vote goes to control.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_probability(self.asd_votes(x) as f64 / self.trees.len() as f64)
    }
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[0] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn tally(rows: &[usize], y: &[ClassLabel]) -> [usize; 2] {
    let mut c = [0; 2];
    for &r in rows {
        c[y[r].index()] += 1;
    }
    c
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Best threshold on one feature for the rows of a node, or `None` when
/// no cut leaves `min_leaf` rows on both sides.
fn best_cut(
    x: &[Vec<f64>],
    y: &[ClassLabel],
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<Split> {
    let mut order: Vec<(f64, ClassLabel)> = rows.iter().map(|&r| (x[r][feature], y[r])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = tally(rows, y);
    let n = order.len();
    let mut left = [0usize; 2];
    let mut best: Option<Split> = None;
    for i in 0..n - 1 {
        left[order[i].1.index()] += 1;
        let n_left = i + 1;
        if order[i].0 == order[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let impurity =
            (n_left as f64 * gini(left) + (n - n_left) as f64 * gini(right)) / n as f64;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            best = Some(Split {
                feature,
                threshold: 0.5 * (order[i].0 + order[i + 1].0),
                impurity,
            });
        }
    }
    best
}

/// Grows one tree on `sample` (row indices, repeats allowed) until nodes are
/// pure, too small to split, or constant on every feature.
///
/// At each node features are visited in random order; the search stops after
/// `max_features` features once some feature admits a valid cut.
pub fn grow_tree(
    x: &[Vec<f64>],
    y: &[ClassLabel],
    sample: Vec<usize>,
    max_features: usize,
    min_leaf: usize,
    rng: &mut impl Rng,
) -> DecisionTree {
    let d = x.first().map_or(0, Vec::len);
    let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
    let mut stack = vec![(0usize, sample)];
    let mut features: Vec<usize> = (0..d).collect();
    while let Some((slot, rows)) = stack.pop() {
        let counts = tally(&rows, y);
        if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 * min_leaf {
            nodes[slot] = Node::Leaf { counts };
            continue;
        }
        features.shuffle(rng);
        let mut best: Option<Split> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= max_features && best.is_some() {
                break;
            }
            if let Some(s) = best_cut(x, y, &rows, f, min_leaf) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { counts };
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| x[i][split.feature] <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        stack.push((left + 1, r));
        stack.push((left, l));
    }
    DecisionTree { nodes }
}

pub fn max_features(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).max(1)
}

/// Tree `t` uses seed `config.seed + t`, so trees can be grown in parallel.
pub(super) fn fit(x: &[Vec<f64>], y: &[ClassLabel], config: &ForestConfig) -> ForestModel {
    let n = x.len();
    let mtry = max_features(x.first().map_or(1, Vec::len));
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(t as u64));
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow_tree(x, y, sample, mtry, config.min_leaf, &mut rng)
        })
        .collect();
    ForestModel { trees }
}
