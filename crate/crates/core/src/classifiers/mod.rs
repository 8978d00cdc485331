//! Binary classifiers behind one train/predict contract.
//!
//! SVM, MLP and KNN z-score their inputs with statistics fitted on the
//! training rows and stored in the model; LDA and the forest see raw values.
//! Every family resolves exact ties in favour of `Control`.

pub mod forest;
pub mod knn;
pub mod lda;
pub mod mlp;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::table::{ClassLabel, FeatureTable, Standardizer};

pub use forest::{DecisionTree, ForestConfig, ForestModel, Node};
pub use knn::{knn_vote, KnnConfig, KnnModel};
pub use lda::{lda_scatter, LdaConfig, LdaModel, Scatter};
pub use mlp::{mlp_forward, mlp_train_epoch, Layer, MlpConfig, MlpModel};
pub use svm::{rbf_kernel, smo_fit, Gamma, KernelMatrix, SmoSolution, SvmConfig, SvmModel};

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training data must contain both classes")]
    DegenerateData,
    #[error("within-class scatter is singular and no ridge was requested")]
    SingularScatter,
    #[error("expected {expected} feature values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k = {k} exceeds the {n} stored training points")]
    KTooLarge { k: usize, n: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("empty feature subset")]
    EmptySubset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Lda,
    Svm,
    Rf,
    Mlp,
    Knn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lda,
        ModelKind::Svm,
        ModelKind::Rf,
        ModelKind::Mlp,
        ModelKind::Knn,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Svm => "svm",
            ModelKind::Rf => "rf",
            ModelKind::Mlp => "mlp",
            ModelKind::Knn => "knn",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Lda => "Linear Discriminant Analysis (LDA)",
            ModelKind::Svm => "Support Vector Machine (SVM)",
            ModelKind::Rf => "Random Forest (RF)",
            ModelKind::Mlp => "Multi-Layer Perceptron (MLP)",
            ModelKind::Knn => "K-Nearest Neighbor (KNN)",
        }
    }

    pub fn default_config(self) -> ClassifierConfig {
        match self {
            ModelKind::Lda => ClassifierConfig::Lda(LdaConfig::default()),
            ModelKind::Svm => ClassifierConfig::Svm(SvmConfig::default()),
            ModelKind::Rf => ClassifierConfig::Rf(ForestConfig::default()),
            ModelKind::Mlp => ClassifierConfig::Mlp(MlpConfig::default()),
            ModelKind::Knn => ClassifierConfig::Knn(KnnConfig::default()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ClassifierError::InvalidConfig(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Lda(LdaConfig),
    Svm(SvmConfig),
    Rf(ForestConfig),
    Mlp(MlpConfig),
    Knn(KnnConfig),
}

impl ClassifierConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierConfig::Lda(_) => ModelKind::Lda,
            ClassifierConfig::Svm(_) => ModelKind::Svm,
            ClassifierConfig::Rf(_) => ModelKind::Rf,
            ClassifierConfig::Mlp(_) => ModelKind::Mlp,
            ClassifierConfig::Knn(_) => ModelKind::Knn,
        }
    }

    /// Copy with its random seed replaced (no-op for deterministic families).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            ClassifierConfig::Rf(f) => f.seed = seed,
            ClassifierConfig::Mlp(m) => m.seed = seed,
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ClassifierError::InvalidConfig(msg.to_string()));
        match self {
            ClassifierConfig::Lda(c) => {
                if c.ridge.is_some_and(|r| !(r >= 0.0) || !r.is_finite()) {
                    return bad("lda ridge must be a finite value >= 0");
                }
            }
            ClassifierConfig::Svm(c) => {
                if !(c.c > 0.0) || !c.c.is_finite() {
                    return bad("svm C must be > 0");
                }
                if let Gamma::Value(g) = c.gamma {
                    if !(g > 0.0) || !g.is_finite() {
                        return bad("svm gamma must be > 0");
                    }
                }
                if !(c.tol > 0.0) {
                    return bad("svm tol must be > 0");
                }
                if c.max_passes == 0 {
                    return bad("svm max_passes must be >= 1");
                }
            }
            ClassifierConfig::Rf(c) => {
                if c.n_trees == 0 || c.min_leaf == 0 {
                    return bad("rf n_trees and min_leaf must be >= 1");
                }
            }
            ClassifierConfig::Mlp(c) => {
                if c.hidden.contains(&0) {
                    return bad("mlp hidden layer sizes must be >= 1");
                }
                if !(c.lr > 0.0) || !c.lr.is_finite() || c.epochs == 0 {
                    return bad("mlp lr and epochs must be > 0");
                }
            }
            ClassifierConfig::Knn(c) => {
                if c.k == 0 {
                    return bad("knn k must be >= 1");
                }
            }
        }
        Ok(())
    }
}

/// Predicted label plus the score it was thresholded from.
///
/// LDA and SVM scores are signed decision values (ASD iff `> 0`); forest,
/// MLP and KNN scores are ASD probabilities or vote shares (ASD iff `> 0.5`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    pub score: f64,
}

impl Prediction {
    pub(crate) fn from_margin(score: f64) -> Self {
        let label = if score > 0.0 {
            ClassLabel::Asd
        } else {
            ClassLabel::Control
        };
        Prediction { label, score }
    }

    pub(crate) fn from_probability(score: f64) -> Self {
        let label = if score > 0.5 {
            ClassLabel::Asd
        } else {
            ClassLabel::Control
        };
        Prediction { label, score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Lda(LdaModel),
    Svm(SvmModel),
    Rf(ForestModel),
    Mlp(MlpModel),
    Knn(KnnModel),
}

/// A fitted classifier together with the feature subset and input scaling it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub features: Vec<String>,
    pub scaler: Option<Standardizer>,
    pub params: ModelParams,
}

pub const MODEL_FORMAT: &str = "ccml-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Lda(_) => ModelKind::Lda,
            ModelParams::Svm(_) => ModelKind::Svm,
            ModelParams::Rf(_) => ModelKind::Rf,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::Knn(_) => ModelKind::Knn,
        }
    }

    /// False only for an SVM whose SMO run hit its iteration cap.
    pub fn converged(&self) -> bool {
        match &self.params {
            ModelParams::Svm(m) => m.converged,
            _ => true,
        }
    }

    /// Classifies one subject given raw values of `self.features`, in order.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.features.len() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.features.len(),
                got: x.len(),
            });
        }
        let scaled;
        let input = match &self.scaler {
            Some(s) => {
                scaled = s.transform(x);
                &scaled[..]
            }
            None => x,
        };
        Ok(match &self.params {
            ModelParams::Lda(m) => m.predict(input),
            ModelParams::Svm(m) => m.predict(input),
            ModelParams::Rf(m) => m.predict(input),
            ModelParams::Mlp(m) => m.predict(input),
            ModelParams::Knn(m) => m.predict(input)?,
        })
    }

    /// Predicts a table row, picking out this model's features by name.
    pub fn predict_row(&self, table: &FeatureTable, row: usize) -> Result<Prediction> {
        let idx = resolve_subset(table, &self.features)?;
        let values = &table.records()[row].features;
        let x: Vec<f64> = idx.iter().map(|&j| values[j]).collect();
        self.predict(&x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "{} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }
}

/// Column indices of `subset` within `table`.
pub fn resolve_subset(table: &FeatureTable, subset: &[String]) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(ClassifierError::EmptySubset);
    }
    subset
        .iter()
        .map(|f| {
            table
                .feature_index(f)
                .ok_or_else(|| ClassifierError::UnknownFeature(f.clone()))
        })
        .collect()
}

/// Fits on raw row-major data. `features` names the columns of `x`.
pub fn fit(
    config: &ClassifierConfig,
    x: &[Vec<f64>],
    y: &[ClassLabel],
    features: Vec<String>,
) -> Result<TrainedModel> {
    config.validate()?;
    if features.is_empty() {
        return Err(ClassifierError::EmptySubset);
    }
    assert_eq!(x.len(), y.len(), "one label per row");
    if let Some(bad) = x.iter().find(|r| r.len() != features.len()) {
        return Err(ClassifierError::DimensionMismatch {
            expected: features.len(),
            got: bad.len(),
        });
    }
    if !y.contains(&ClassLabel::Asd) || !y.contains(&ClassLabel::Control) {
        return Err(ClassifierError::DegenerateData);
    }
    let scaled = |x: &[Vec<f64>]| {
        let s = Standardizer::fit(x);
        let z = s.transform_all(x);
        (s, z)
    };
    let (scaler, params) = match config {
        ClassifierConfig::Lda(c) => (None, ModelParams::Lda(lda::fit(x, y, c)?)),
        ClassifierConfig::Rf(c) => (None, ModelParams::Rf(forest::fit(x, y, c))),
        ClassifierConfig::Svm(c) => {
            let (s, z) = scaled(x);
            (Some(s), ModelParams::Svm(svm::fit(&z, y, c)?))
        }
        ClassifierConfig::Mlp(c) => {
            let (s, z) = scaled(x);
            (Some(s), ModelParams::Mlp(mlp::fit(&z, y, c)))
        }
        ClassifierConfig::Knn(c) => {
            let (s, z) = scaled(x);
            (Some(s), ModelParams::Knn(knn::fit(z, y, c)?))
        }
    };
    Ok(TrainedModel {
        features,
        scaler,
        params,
    })
}

/// Trains on the listed rows of `table` using only `subset` features.
pub fn train_rows(
    config: &ClassifierConfig,
    table: &FeatureTable,
    rows: &[usize],
    subset: &[String],
) -> Result<TrainedModel> {
    let idx = resolve_subset(table, subset)?;
    let x = table.design(rows, &idx);
    let y: Vec<ClassLabel> = rows.iter().map(|&i| table.records()[i].label).collect();
    fit(config, &x, &y, subset.to_vec())
}

/// Trains on every row of `table`.
pub fn train(
    config: &ClassifierConfig,
    table: &FeatureTable,
    subset: &[String],
) -> Result<TrainedModel> {
    let rows: Vec<usize> = (0..table.len()).collect();
    train_rows(config, table, &rows, subset)
}
