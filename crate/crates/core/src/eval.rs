//! Cross-validation protocols: stratified k-fold and leave-one-site-out,
//! with optional feature selection fitted on each training split.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierConfig, ClassifierError, ModelKind, TrainedModel};
use crate::table::{ClassLabel, FeatureTable};
use crate::weights::{self, WeightError, WeightMethod};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("k = {k} folds is invalid here (smallest group has {available} subjects)")]
    KTooLarge { k: usize, available: usize },
    #[error("leave-one-site-out needs at least two sites")]
    SingleSite,
    #[error("cannot score an empty test set")]
    EmptyTest,
    #[error("invalid split plan: {0}")]
    InvalidPlan(String),
    #[error("fold {tag}: {source}")]
    Fold {
        tag: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Scheme {
    Kfold { k: usize, seed: u64, stratified: bool },
    Loso,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Kfold { k, .. } => write!(f, "{k}-fold"),
            Scheme::Loso => f.write_str("leave-one-site-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    /// Fold number (1-based) or held-out site.
    pub tag: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}

/// Shuffled k-fold partition, stratified by class unless `stratified` is false.
///
/// Rows are ordered by subject id before the seeded shuffle, so the same
/// subjects land in the same folds whatever the table's row order. Within
/// each class (or over all rows when unstratified) the shuffled rows are dealt
/// round-robin, continuing the deal across classes; fold sizes therefore
/// differ by at most one overall and per class.
pub fn kfold_split(table: &FeatureTable, k: usize, seed: u64, stratified: bool) -> Result<SplitPlan> {
    let n = table.len();
    if k < 2 {
        return Err(EvalError::KTooLarge { k, available: n });
    }
    let mut groups: Vec<Vec<usize>> = if stratified {
        ClassLabel::ALL
            .iter()
            .map(|&l| (0..n).filter(|&i| table.records()[i].label == l).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    let smallest = groups.iter().map(Vec::len).min().unwrap_or(0);
    if smallest < k {
        return Err(EvalError::KTooLarge {
            k,
            available: smallest,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut position = 0;
    for group in &mut groups {
        group.sort_by(|&a, &b| table.records()[a].subject_id.cmp(&table.records()[b].subject_id));
        group.shuffle(&mut rng);
        for &i in group.iter() {
            tests[position % k].push(i);
            position += 1;
        }
    }
    let folds = tests
        .into_iter()
        .enumerate()
        .map(|(f, mut test)| {
            test.sort_unstable();
            Fold {
                tag: (f + 1).to_string(),
                train: complement(n, &test),
                test,
            }
        })
        .collect();
    Ok(SplitPlan {
        scheme: Scheme::Kfold { k, seed, stratified },
        folds,
    })
}

/// One fold per site, in canonical site order.
pub fn loso_split(table: &FeatureTable) -> Result<SplitPlan> {
    let sites = table.sites();
    if sites.len() < 2 {
        return Err(EvalError::SingleSite);
    }
    let n = table.len();
    let folds = sites
        .into_iter()
        .map(|site| {
            let test: Vec<usize> = (0..n).filter(|&i| table.records()[i].site == site).collect();
            Fold {
                tag: site,
                train: complement(n, &test),
                test,
            }
        })
        .collect();
    Ok(SplitPlan {
        scheme: Scheme::Loso,
        folds,
    })
}

impl SplitPlan {
    /// Checks the partition invariants of the plan against `table`.
    pub fn validate(&self, table: &FeatureTable) -> Result<()> {
        let n = table.len();
        let bad = |msg: String| Err(EvalError::InvalidPlan(msg));
        let mut seen = vec![0usize; n];
        for fold in &self.folds {
            if fold.test.is_empty() {
                return bad(format!("fold {} has no test rows", fold.tag));
            }
            if fold.train.len() + fold.test.len() != n {
                return bad(format!("fold {} does not cover the table", fold.tag));
            }
            let mut in_test = vec![false; n];
            for &i in &fold.test {
                if i >= n || in_test[i] {
                    return bad(format!("fold {} has a bad test index {i}", fold.tag));
                }
                in_test[i] = true;
                seen[i] += 1;
            }
            if fold.train.iter().any(|&i| i >= n || in_test[i]) {
                return bad(format!("fold {} trains on test rows", fold.tag));
            }
            if let Scheme::Loso = self.scheme {
                let site_rows = table.records().iter().filter(|r| r.site == fold.tag).count();
                if site_rows != fold.test.len()
                    || fold.test.iter().any(|&i| table.records()[i].site != fold.tag)
                {
                    return bad(format!("fold {} is not exactly its site", fold.tag));
                }
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return bad("test sets do not partition the rows".into());
        }
        if let Scheme::Kfold { k, .. } = self.scheme {
            let sizes: Vec<usize> = self.folds.iter().map(|f| f.test.len()).collect();
            if sizes.len() != k
                || sizes.iter().max().unwrap_or(&0) - sizes.iter().min().unwrap_or(&0) > 1
            {
                return bad(format!("fold sizes {sizes:?} are unbalanced"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionScope {
    /// Weights computed on each fold's training rows.
    PerFold,
    /// Weights computed once on the whole table.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: WeightMethod,
    pub threshold: f64,
    pub n_bins: usize,
    pub scope: SelectionScope,
}

impl Default for Selection {
    fn default() -> Self {
        Selection {
            method: WeightMethod::ChiSquare,
            threshold: 0.4,
            n_bins: 10,
            scope: SelectionScope::PerFold,
        }
    }
}

impl Selection {
    /// Features passing the threshold on `rows`; all features if none pass.
    pub fn select(&self, table: &FeatureTable, rows: &[usize]) -> Result<Vec<String>> {
        let wv = weights::weigh_rows(table, rows, self.method, self.n_bins)?;
        let picked = weights::select_by_threshold(&wv, self.threshold).selected;
        Ok(if picked.is_empty() {
            table.feature_names().to_vec()
        } else {
            picked
        })
    }
}

/// Confusion counts with ASD as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Asd, ClassLabel::Asd) => self.tp += 1,
            (ClassLabel::Control, ClassLabel::Control) => self.tn += 1,
            (ClassLabel::Control, ClassLabel::Asd) => self.fp += 1,
            (ClassLabel::Asd, ClassLabel::Control) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn accuracy(c: &Confusion) -> Result<f64> {
    match c.total() {
        0 => Err(EvalError::EmptyTest),
        n => Ok((c.tp + c.tn) as f64 / n as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub tag: String,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub features: Vec<String>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub model: ModelKind,
    pub config: ClassifierConfig,
    pub selection: Option<Selection>,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
}

impl EvalReport {
    pub fn all_converged(&self) -> bool {
        self.folds.iter().all(|f| f.converged)
    }

    /// One row per fold.
    pub fn folds_csv(&self) -> String {
        let mut out = String::from("tag,n_train,n_test,tp,tn,fp,fn,accuracy,converged,features\n");
        for f in &self.folds {
            let c = f.confusion;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{},{}\n",
                f.tag,
                f.n_train,
                f.n_test,
                c.tp,
                c.tn,
                c.fp,
                c.fn_,
                f.accuracy,
                f.converged,
                f.features.join(";")
            ));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Selects features (unless `preselected`) and trains on the fold's training rows only.
pub fn fit_fold(
    table: &FeatureTable,
    fold: &Fold,
    selection: Option<&Selection>,
    preselected: Option<&[String]>,
    config: &ClassifierConfig,
) -> Result<TrainedModel> {
    let subset = match (preselected, selection) {
        (Some(s), _) => s.to_vec(),
        (None, Some(sel)) => sel.select(table, &fold.train)?,
        (None, None) => table.feature_names().to_vec(),
    };
    Ok(classifiers::train_rows(config, table, &fold.train, &subset)?)
}

fn score_fold(table: &FeatureTable, fold: &Fold, model: &TrainedModel) -> Result<FoldResult> {
    let mut confusion = Confusion::default();
    for &i in &fold.test {
        let p = model.predict_row(table, i)?;
        confusion.record(table.records()[i].label, p.label);
    }
    Ok(FoldResult {
        tag: fold.tag.clone(),
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        accuracy: accuracy(&confusion)?,
        confusion,
        features: model.features.clone(),
        converged: model.converged(),
    })
}

/// Runs every fold of `plan` (in parallel; fold `i` uses seed `seed + i`).
pub fn run_protocol(
    table: &FeatureTable,
    plan: &SplitPlan,
    selection: Option<&Selection>,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<EvalReport> {
    plan.validate(table)?;
    let global = match selection {
        Some(sel) if sel.scope == SelectionScope::Global => {
            let all: Vec<usize> = (0..table.len()).collect();
            Some(sel.select(table, &all)?)
        }
        _ => None,
    };
    let folds = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let cfg = config.with_seed(seed.wrapping_add(i as u64));
            fit_fold(table, fold, selection, global.as_deref(), &cfg)
                .and_then(|model| score_fold(table, fold, &model))
                .map_err(|e| EvalError::Fold {
                    tag: fold.tag.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(EvalReport {
        scheme: plan.scheme.clone(),
        model: config.kind(),
        config: config.clone(),
        selection: selection.cloned(),
        seed,
        folds,
        mean_accuracy,
    })
}

/// Mean accuracies of one classifier across the four protocol variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub model: ModelKind,
    pub loso_without: f64,
    pub loso_with: f64,
    pub kfold_without: f64,
    pub kfold_with: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub rows: Vec<MatrixRow>,
    pub reports: Vec<EvalReport>,
}

impl MatrixReport {
    /// Classifier × {LOSO, k-fold} × {without, with selection} accuracies in percent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "classifier,loso_without_selection,loso_with_selection,kfold_without_selection,kfold_with_selection\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.2},{:.2},{:.2},{:.2}\n",
                r.model.title(),
                100.0 * r.loso_without,
                100.0 * r.loso_with,
                100.0 * r.kfold_without,
                100.0 * r.kfold_with
            ));
        }
        out
    }

    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(EvalReport::all_converged)
    }
}

/// Every classifier in `configs` under LOSO and k-fold, with and without selection.
pub fn run_matrix(
    table: &FeatureTable,
    configs: &[ClassifierConfig],
    k: usize,
    stratified: bool,
    selection: &Selection,
    seed: u64,
) -> Result<MatrixReport> {
    let loso = loso_split(table)?;
    let kfold = kfold_split(table, k, seed, stratified)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for config in configs {
        let mut acc = [0.0; 4];
        for (slot, (plan, sel)) in [
            (&loso, None),
            (&loso, Some(selection)),
            (&kfold, None),
            (&kfold, Some(selection)),
        ]
        .into_iter()
        .enumerate()
        {
            let report = run_protocol(table, plan, sel, config, seed)?;
            acc[slot] = report.mean_accuracy;
            reports.push(report);
        }
        rows.push(MatrixRow {
            model: config.kind(),
            loso_without: acc[0],
            loso_with: acc[1],
            kfold_without: acc[2],
            kfold_with: acc[3],
        });
    }
    Ok(MatrixReport { rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{KnnConfig, LdaConfig};
    use crate::table::{synthesize, SubjectRecord, SummaryStats};

    fn small_table(n_per_class: usize, sites: usize) -> FeatureTable {
        synthesize(&SummaryStats::abide_reference(), n_per_class, sites, 5).unwrap()
    }

    #[test]
    fn ten_balanced_rows_five_folds() {
        let t = small_table(5, 2);
        let plan = kfold_split(&t, 5, 1, true).unwrap();
        plan.validate(&t).unwrap();
        for fold in &plan.folds {
            assert_eq!(fold.test.len(), 2);
            let asd = fold.test.iter().filter(|&&i| t.records()[i].label == ClassLabel::Asd).count();
            assert_eq!(asd, 1);
        }
    }

    #[test]
    fn leave_one_out_needs_relaxed_stratification() {
        let t = small_table(4, 2);
        assert!(matches!(kfold_split(&t, 8, 0, true), Err(EvalError::KTooLarge { k: 8, available: 4 })));
        let plan = kfold_split(&t, 8, 0, false).unwrap();
        plan.validate(&t).unwrap();
        assert!(plan.folds.iter().all(|f| f.test.len() == 1));
        assert!(kfold_split(&t, 9, 0, false).is_err());
        assert!(kfold_split(&t, 1, 0, false).is_err());
    }

    #[test]
    fn loso_folds_follow_sites() {
        let t = small_table(20, 17);
        let plan = loso_split(&t).unwrap();
        assert_eq!(plan.folds.len(), 17);
        assert_eq!(plan.folds[0].tag, "CALTECH");
        plan.validate(&t).unwrap();
        for f in &plan.folds {
            assert_eq!(f.train.len() + f.test.len(), t.len());
        }

        let two = small_table(3, 2);
        let plan = loso_split(&two).unwrap();
        assert_eq!(plan.folds[0].train, plan.folds[1].test);
        assert!(matches!(loso_split(&small_table(3, 1)), Err(EvalError::SingleSite)));
    }

    #[test]
    fn validate_catches_overlap() {
        let t = small_table(5, 2);
        let mut plan = kfold_split(&t, 5, 1, true).unwrap();
        let stolen = plan.folds[1].test[0];
        plan.folds[0].train.retain(|&i| i != stolen);
        plan.folds[0].test.push(stolen);
        assert!(plan.validate(&t).is_err());
    }

    #[test]
    fn same_subjects_in_same_folds_after_reordering() {
        let t = small_table(30, 5);
        let order: Vec<usize> = (0..t.len()).rev().collect();
        let p = t.permuted(&order);
        let a = kfold_split(&t, 5, 9, true).unwrap();
        let b = kfold_split(&p, 5, 9, true).unwrap();
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            let mut ia: Vec<&str> = fa.test.iter().map(|&i| t.records()[i].subject_id.as_str()).collect();
            let mut ib: Vec<&str> = fb.test.iter().map(|&i| p.records()[i].subject_id.as_str()).collect();
            ia.sort();
            ib.sort();
            assert_eq!(ia, ib);
        }
    }

    #[test]
    fn accuracy_examples() {
        let c = |tp, tn, fp, fn_| Confusion { tp, tn, fp, fn_ };
        assert_eq!(accuracy(&c(5, 5, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&c(0, 0, 4, 6)).unwrap(), 0.0);
        assert_eq!(accuracy(&c(3, 2, 2, 3)).unwrap(), 0.5);
        assert!(matches!(accuracy(&c(0, 0, 0, 0)), Err(EvalError::EmptyTest)));
    }

    fn separable_table() -> FeatureTable {
        let records = (0..60)
            .map(|i| {
                let label = if i % 2 == 0 { ClassLabel::Asd } else { ClassLabel::Control };
                let base = if label == ClassLabel::Asd { 10.0 } else { -10.0 };
                SubjectRecord {
                    subject_id: format!("p{i}"),
                    site: ["NYU", "USM", "KKI"][i % 3].into(),
                    label,
                    sex: None,
                    age: None,
                    features: vec![base + (i % 7) as f64 * 0.1, (i % 5) as f64],
                }
            })
            .collect();
        FeatureTable::new(vec!["signal".into(), "noise".into()], records).unwrap()
    }

    #[test]
    fn separable_data_scores_perfectly_and_self_consistently() {
        let t = separable_table();
        let plan = kfold_split(&t, 5, 3, true).unwrap();
        let sel = Selection::default();
        let r = run_protocol(&t, &plan, Some(&sel), &ClassifierConfig::Lda(LdaConfig::default()), 3).unwrap();
        assert_eq!(r.mean_accuracy, 1.0);
        let mean = r.folds.iter().map(|f| f.accuracy).sum::<f64>() / r.folds.len() as f64;
        assert_eq!(mean, r.mean_accuracy);
        for f in &r.folds {
            assert_eq!(f.features[0], "signal");
            let c = f.confusion;
            assert_eq!(f.accuracy, (c.tp + c.tn) as f64 / f.n_test as f64);
        }
        assert!(r.folds_csv().lines().count() == 6);
    }

    #[test]
    fn training_ignores_test_rows() {
        let t = small_table(40, 4);
        let plan = kfold_split(&t, 4, 2, true).unwrap();
        let fold = &plan.folds[1];
        let mut is_test = vec![false; t.len()];
        for &i in &fold.test {
            is_test[i] = true;
        }
        let poisoned = t.map_features(|row, _, v| if is_test[row] { 1e9 } else { v });
        let sel = Selection::default();
        for kind in ModelKind::ALL {
            let config = kind.default_config();
            let a = fit_fold(&t, fold, Some(&sel), None, &config).unwrap();
            let b = fit_fold(&poisoned, fold, Some(&sel), None, &config).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn global_selection_uses_one_subset() {
        let t = small_table(30, 3);
        let plan = kfold_split(&t, 3, 0, true).unwrap();
        let sel = Selection {
            scope: SelectionScope::Global,
            ..Selection::default()
        };
        let r = run_protocol(&t, &plan, Some(&sel), &ClassifierConfig::Knn(KnnConfig::default()), 0).unwrap();
        assert!(r.folds.windows(2).all(|w| w[0].features == w[1].features));
    }

    #[test]
    fn matrix_shape() {
        let t = small_table(25, 3);
        let configs = [ModelKind::Lda.default_config(), ModelKind::Knn.default_config()];
        let m = run_matrix(&t, &configs, 5, true, &Selection::default(), 1).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.reports.len(), 8);
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("Linear Discriminant Analysis (LDA),"));
    }
}
