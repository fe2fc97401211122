//! Experiment configuration, read from TOML. Every field has a default, so
//! an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use maternal_core::data::{FeatureSchema, GeneratorSpec, FEATURE_NAMES, LABEL_NAME};
use maternal_core::ensemble::{ForestConfig, GbConfig};
use maternal_core::model::{ModelKind, ModelSpec};
use maternal_core::nnet::TrainConfig;
use maternal_core::rng::derive_seed;
use maternal_core::svm::SvmConfig;
use maternal_core::tree::TreeConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Where `run` writes its files. Not part of the report or the hash.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub smote: SmoteSection,
    pub split: SplitSection,
    pub models: ModelsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: None,
            data: DataConfig::default(),
            smote: SmoteSection::default(),
            split: SplitSection::default(),
            models: ModelsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: SourceKind,
    /// CSV input when `source = "csv"`.
    pub path: Option<PathBuf>,
    /// Synthetic row count.
    pub rows: usize,
    /// Fraction of synthetic feature cells blanked before imputation.
    pub missing_rate: f64,
    /// Synthetic generator; the nine-symptom default when absent.
    pub generator: Option<GeneratorSpec>,
    pub impute: bool,
    pub features: Vec<String>,
    pub label: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Synthetic,
            path: None,
            rows: 470,
            missing_rate: 0.0,
            generator: None,
            impute: true,
            features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            label: LABEL_NAME.to_string(),
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> AppResult<FeatureSchema> {
        FeatureSchema::new(self.features.clone(), self.label.clone()).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        self.generator.clone().unwrap_or_else(GeneratorSpec::mortality_default)
    }
}

/// Where oversampling happens relative to the train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmotePlacement {
    /// Only the training partition is oversampled; the test set keeps its
    /// natural class ratio.
    TrainOnly,
    /// The whole dataset is oversampled, then split.
    BeforeSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k: usize,
    pub placement: SmotePlacement,
}

impl Default for SmoteSection {
    fn default() -> Self {
        Self {
            enabled: true,
            k: 5,
            placement: SmotePlacement::TrainOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_ratio: f64,
    pub stratified: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            train_ratio: 0.7,
            stratified: false,
        }
    }
}

/// One model's table: `enabled` plus that family's hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection<T> {
    #[serde(default = "enabled_by_default")]
    pub enabled: bool,
    #[serde(flatten)]
    pub params: T,
}

fn enabled_by_default() -> bool {
    true
}

impl<T: Default> Default for ModelSection<T> {
    fn default() -> Self {
        Self {
            enabled: true,
            params: T::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub svc: ModelSection<SvmConfig>,
    pub decision_tree: ModelSection<TreeConfig>,
    pub random_forest: ModelSection<ForestConfig>,
    pub gradient_boosting: ModelSection<GbConfig>,
    pub ann: ModelSection<TrainConfig>,
}

impl ModelsConfig {
    pub fn is_enabled(&self, kind: ModelKind) -> bool {
        match kind {
            ModelKind::Svc => self.svc.enabled,
            ModelKind::DecisionTree => self.decision_tree.enabled,
            ModelKind::RandomForest => self.random_forest.enabled,
            ModelKind::GradientBoosting => self.gradient_boosting.enabled,
            ModelKind::Ann => self.ann.enabled,
        }
    }

    pub fn set_enabled(&mut self, kind: ModelKind, on: bool) {
        match kind {
            ModelKind::Svc => self.svc.enabled = on,
            ModelKind::DecisionTree => self.decision_tree.enabled = on,
            ModelKind::RandomForest => self.random_forest.enabled = on,
            ModelKind::GradientBoosting => self.gradient_boosting.enabled = on,
            ModelKind::Ann => self.ann.enabled = on,
        }
    }

    /// Enabled kinds in report order.
    pub fn enabled(&self) -> Vec<ModelKind> {
        ModelKind::ALL.into_iter().filter(|&k| self.is_enabled(k)).collect()
    }

    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Svc => ModelSpec::Svc(self.svc.params.clone()),
            ModelKind::DecisionTree => ModelSpec::DecisionTree(self.decision_tree.params.clone()),
            ModelKind::RandomForest => ModelSpec::RandomForest(self.random_forest.params.clone()),
            ModelKind::GradientBoosting => ModelSpec::GradientBoosting(self.gradient_boosting.params.clone()),
            ModelKind::Ann => ModelSpec::Ann(self.ann.params.clone()),
        }
    }
}

/// Seed streams derived from the top-level seed.
pub mod streams {
    pub const SYNTH: u64 = 1;
    pub const MISSING: u64 = 2;
    pub const SMOTE: u64 = 3;
    pub const SPLIT: u64 = 4;
    /// Model `i` in report order uses `MODEL_BASE + i`.
    pub const MODEL_BASE: u64 = 10;
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> AppResult<()> {
        let fail = |m: String| Err(AppError::Config(m));
        if self.models.enabled().is_empty() {
            return fail("no models enabled".into());
        }
        let r = self.split.train_ratio;
        if !(r > 0.0 && r < 1.0) {
            return fail(format!("split.train_ratio {r} outside (0, 1)"));
        }
        if self.smote.k == 0 {
            return fail("smote.k must be >= 1".into());
        }
        self.data.schema()?;
        match self.data.source {
            SourceKind::Csv if self.data.path.is_none() => return fail("data.source = \"csv\" needs data.path".into()),
            SourceKind::Synthetic => {
                if self.data.rows < 2 {
                    return fail(format!("data.rows = {} is too small", self.data.rows));
                }
                if !(0.0..1.0).contains(&self.data.missing_rate) {
                    return fail(format!("data.missing_rate {} outside [0, 1)", self.data.missing_rate));
                }
                let spec = self.data.generator_spec();
                spec.validate().map_err(|e| AppError::Config(format!("data.generator: {e}")))?;
                let names: Vec<&str> = spec.features.iter().map(|f| f.name.as_str()).collect();
                if names != self.data.features.iter().map(String::as_str).collect::<Vec<_>>()
                    || spec.label_name != self.data.label
                {
                    return fail("data.generator columns do not match data.features/data.label".into());
                }
            }
            SourceKind::Csv => {}
        }
        Ok(())
    }

    /// Copy with every model seed set from the top-level seed. Sections
    /// without a seed (the decision tree) are unchanged.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        let seed_for = |kind: ModelKind| {
            let i = ModelKind::ALL.iter().position(|&k| k == kind).unwrap() as u64;
            derive_seed(self.seed, streams::MODEL_BASE + i)
        };
        out.models.svc.params.seed = seed_for(ModelKind::Svc);
        out.models.random_forest.params.seed = seed_for(ModelKind::RandomForest);
        out.models.gradient_boosting.params.seed = seed_for(ModelKind::GradientBoosting);
        out.models.ann.params.seed = seed_for(ModelKind::Ann);
        out
    }

    /// Hex SHA-256 of the resolved configuration's JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.resolved()).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}
