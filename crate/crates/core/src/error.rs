use alloc::boxed::Box;
use alloc::string::String;

use crate::svm::SvmModel;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("row {row} has {found} cells but the header has {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("column `{0}` has no observed values to impute from")]
    EmptyColumn(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("missing value in row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("non-finite value in row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("label {value} in row {row} is not 0 or 1")]
    InvalidLabel { row: usize, value: f64 },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("class counts are inconsistent: children do not sum to the parent")]
    InconsistentCounts,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("SMO did not converge within {sweeps} sweeps")]
    SvmNotConverged { sweeps: usize, model: Box<SvmModel> },
}
