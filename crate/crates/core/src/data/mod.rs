//! Tabular cohort handling: schema declaration, CSV ingestion, cleaning,
//! standardization, SMOTE rebalancing, stratified splitting and synthetic
//! cohort generation.

mod cohort;
mod pipeline;
mod preprocess;
mod schema;
mod smote;
mod split;
mod synthetic;

pub use cohort::{load_csv, Cohort, FeatureValue, Sample};
pub use pipeline::{prepare, PrepConfig, Prepared, SmoteMode};
pub use preprocess::{destandardize, listwise_delete, remove_outliers, standardize, ScalerStats};
pub use schema::{default_schema, FeatureDescriptor, FeatureKind, FeatureSchema};
pub use smote::smote;
pub use split::stratified_split;
pub use synthetic::{generate_synthetic_cohort, Interaction, PlantedEffect, PlantedSignal};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("unknown category label '{label}' at row {row}, column '{column}'")]
    UnknownCategory {
        row: usize,
        column: String,
        label: String,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("header does not match schema: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("degenerate cohort: {0}")]
    DegenerateCohort(String),
    #[error("cohort contains a single class; both classes are required")]
    SingleClass,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("I/O error: {0}")]
    Io(String),
}
