//! Uniform handle over the five classifier families.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ensemble::{self, ForestConfig, ForestModel, GbConfig, GbModel};
use crate::nnet::{self, NetParams, TrainConfig};
use crate::svm::{self, SvmConfig, SvmModel};
use crate::tree::{self, TreeConfig, TreeNode};
use crate::{Error, Matrix, Result};

/// Model families in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svc,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    Ann,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Svc,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
        ModelKind::Ann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svc => "svc",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::Ann => "ann",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        match s.as_str() {
            "svc" | "svm" => Ok(ModelKind::Svc),
            "decision_tree" | "dt" => Ok(ModelKind::DecisionTree),
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "gradient_boosting" | "gb" => Ok(ModelKind::GradientBoosting),
            "ann" | "mlp" => Ok(ModelKind::Ann),
            _ => Err(Error::InvalidParameter(format!("unknown model kind `{s}`"))),
        }
    }
}

/// Hyperparameters for one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Svc(SvmConfig),
    DecisionTree(TreeConfig),
    RandomForest(ForestConfig),
    GradientBoosting(GbConfig),
    Ann(TrainConfig),
}

impl ModelSpec {
    /// Family defaults with the given seed.
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Svc => ModelSpec::Svc(SvmConfig { seed, ..Default::default() }),
            ModelKind::DecisionTree => ModelSpec::DecisionTree(TreeConfig::classification()),
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestConfig { seed, ..Default::default() }),
            ModelKind::GradientBoosting => ModelSpec::GradientBoosting(GbConfig { seed, ..Default::default() }),
            ModelKind::Ann => ModelSpec::Ann(TrainConfig { seed, ..Default::default() }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Svc(_) => ModelKind::Svc,
            ModelSpec::DecisionTree(_) => ModelKind::DecisionTree,
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::GradientBoosting(_) => ModelKind::GradientBoosting,
            ModelSpec::Ann(_) => ModelKind::Ann,
        }
    }

    /// Fits the model. An SVM that runs out of sweeps is reported as
    /// `Error::SvmNotConverged`, which carries the best model found.
    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Svc(c) => TrainedModel::Svm(svm::fit_svm(ds, c)?),
            ModelSpec::DecisionTree(c) => TrainedModel::DecisionTree(tree::fit_tree(ds, c, None)?),
            ModelSpec::RandomForest(c) => TrainedModel::RandomForest(ensemble::fit_forest(ds, c)?),
            ModelSpec::GradientBoosting(c) => TrainedModel::GradientBoosting(ensemble::fit_gb(ds, c)?),
            ModelSpec::Ann(c) => {
                ds.require_both_classes()?;
                TrainedModel::Mlp(nnet::train_mlp(ds, c)?.0)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Svm(SvmModel),
    DecisionTree(TreeNode),
    RandomForest(ForestModel),
    GradientBoosting(GbModel),
    Mlp(NetParams),
}

impl From<SvmModel> for TrainedModel {
    fn from(m: SvmModel) -> Self {
        TrainedModel::Svm(m)
    }
}

impl From<Box<SvmModel>> for TrainedModel {
    fn from(m: Box<SvmModel>) -> Self {
        TrainedModel::Svm(*m)
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Svm(_) => ModelKind::Svc,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::RandomForest(_) => ModelKind::RandomForest,
            TrainedModel::GradientBoosting(_) => ModelKind::GradientBoosting,
            TrainedModel::Mlp(_) => ModelKind::Ann,
        }
    }

    /// Checks internal consistency and that the model expects `width`
    /// features. Run after deserialising untrusted input.
    pub fn validate(&self, width: usize) -> Result<()> {
        match self {
            TrainedModel::Svm(m) => m.validate(width),
            TrainedModel::DecisionTree(t) => t.validate(width),
            TrainedModel::RandomForest(f) => {
                if f.trees.is_empty() {
                    return Err(Error::CorruptModel("forest without trees".into()));
                }
                f.trees.iter().try_for_each(|t| t.validate(width))
            }
            TrainedModel::GradientBoosting(g) => {
                if !(g.prior > 0.0 && g.prior < 1.0) || !g.f0.is_finite() || !g.learning_rate.is_finite() {
                    return Err(Error::CorruptModel("invalid boosting prior".into()));
                }
                g.stages.iter().try_for_each(|t| t.validate(width))
            }
            TrainedModel::Mlp(p) => {
                p.check_architecture(false)?;
                if p.input_dim() != width {
                    return Err(Error::CorruptModel(format!(
                        "network expects {} features, schema has {width}",
                        p.input_dim()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Class and a positive-class score for one row. The score is a
    /// probability, except for the SVM where it is the decision value.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        match self {
            TrainedModel::Svm(m) => {
                let f = svm::decision_function(m, x)?;
                Ok((u8::from(f >= 0.0), f))
            }
            TrainedModel::DecisionTree(t) => tree::predict_class(t, x).map(|(c, p)| (c, p[1])),
            TrainedModel::RandomForest(f) => ensemble::predict_forest(f, x).map(|(c, p)| (c, p[1])),
            TrainedModel::GradientBoosting(g) => ensemble::predict_gb(g, x),
            TrainedModel::Mlp(p) => {
                let row = Matrix::from_vec(1, x.len(), x.to_vec())?;
                let (classes, probs) = nnet::predict_mlp(p, &row)?;
                Ok((classes[0], probs[(0, 1)]))
            }
        }
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<(u8, f64)>> {
        if let TrainedModel::Mlp(p) = self {
            let (classes, probs) = nnet::predict_mlp(p, x)?;
            return Ok(classes.into_iter().zip(probs.column(1)).collect());
        }
        x.iter_rows().map(|r| self.predict(r)).collect()
    }
}
