//! Corpus-callosum and brain-volume morphometry pipeline for ASD vs control
//! classification: table ingestion, entropy/chi-square feature weighting,
//! five classifiers and cross-validation protocols.

pub mod chart;
pub mod classifiers;
pub mod discretize;
pub mod eval;
pub mod keyvalue;
pub mod table;
pub mod weights;

pub use classifiers::{ClassifierConfig, ModelKind, Prediction, TrainedModel};
pub use table::{ClassLabel, FeatureTable, SubjectRecord, SummaryStats};
pub use weights::{WeightMethod, WeightVector};
