use std::fmt;
use std::path::PathBuf;

use maternal_core::model::ModelKind;

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Impute,
    SelectFeatures,
    Smote,
    Split,
    Correlate,
    Train(ModelKind),
    Evaluate(ModelKind),
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Load => f.write_str("load"),
            Stage::Impute => f.write_str("impute"),
            Stage::SelectFeatures => f.write_str("select-features"),
            Stage::Smote => f.write_str("smote"),
            Stage::Split => f.write_str("split"),
            Stage::Correlate => f.write_str("correlate"),
            Stage::Train(k) => write!(f, "train {k}"),
            Stage::Evaluate(k) => write!(f, "evaluate {k}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("data: {0}")]
    Data(String),
    #[error("model file {}: {reason}", path.display())]
    ModelFile { path: PathBuf, reason: String },
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: maternal_core::Error,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for configuration problems, 2 for unreadable or invalid data,
    /// 3 when fitting or evaluating a model fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Io { .. } | AppError::Data(_) | AppError::ModelFile { .. } => 2,
            AppError::Stage { stage, source } => match (stage, source) {
                (_, maternal_core::Error::InvalidParameter(_)) => 1,
                (Stage::Train(_) | Stage::Evaluate(_), _) => 3,
                _ => 2,
            },
        }
    }
}

/// Attaches a stage to a core result.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> AppResult<T>;
}

impl<T> AtStage<T> for maternal_core::Result<T> {
    fn at(self, stage: Stage) -> AppResult<T> {
        self.map_err(|source| AppError::Stage { stage, source })
    }
}
