//! Run reports and plot data.
//!
//! `report.json` depends only on the configuration, so identical runs give
//! identical bytes. Wall-clock times go to `timings.json` instead.

use std::path::{Path, PathBuf};

use maternal_core::eval::{ConfusionMatrix, MetricsReport};
use maternal_core::model::ModelKind;
use maternal_core::stats::CorrelationMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SmotePlacement};
use crate::csv_io::write_file;
use crate::error::AppResult;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows_loaded: usize,
    pub missing_cells: usize,
    /// Class counts `[negative, positive]` before oversampling.
    pub class_counts: [usize; 2],
    pub smote_placement: Option<SmotePlacement>,
    pub synthetic_rows: usize,
    /// Class counts of whatever was oversampled, after SMOTE.
    pub post_smote_class_counts: [usize; 2],
    /// Minority/majority ratio after SMOTE.
    pub post_smote_ratio: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_class_counts: [usize; 2],
    pub test_class_counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Accuracy, precision, recall, F1 in percent, two decimals.
    pub percent: [String; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub config_hash: String,
    /// Configuration with defaults and derived seeds filled in.
    pub config: ExperimentConfig,
    /// Pipeline steps in the order they ran.
    pub stages: Vec<String>,
    pub warnings: Vec<String>,
    pub dataset: DatasetSummary,
    pub correlation: CorrelationMatrix,
    pub models: Vec<ModelReport>,
    /// Training wall-clock seconds per model, written to `timings.json`.
    #[serde(skip)]
    pub timings: Vec<(ModelKind, f64)>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == kind)
    }
}

fn timings_json(report: &RunReport) -> String {
    let map: serde_json::Map<String, serde_json::Value> = report
        .timings
        .iter()
        .map(|(k, secs)| (k.name().to_string(), serde_json::json!(secs)))
        .collect();
    let mut s = serde_json::to_string_pretty(&map).expect("timings serialise");
    s.push('\n');
    s
}

/// `report.json` and `timings.json`.
pub fn write_report(report: &RunReport, dir: &Path) -> AppResult<Vec<PathBuf>> {
    let report_path = dir.join("report.json");
    let timings_path = dir.join("timings.json");
    write_file(&report_path, report.to_json().as_bytes())?;
    write_file(&timings_path, timings_json(report).as_bytes())?;
    Ok(vec![report_path, timings_path])
}

pub fn metrics_csv(models: &[ModelReport]) -> String {
    let mut s = String::from("model,accuracy,precision,recall,f1\n");
    for m in models {
        s.push_str(m.model.name());
        for p in &m.percent {
            s.push(',');
            s.push_str(p);
        }
        s.push('\n');
    }
    s
}

pub fn correlation_csv(corr: &CorrelationMatrix) -> String {
    let mut s = String::new();
    for l in &corr.labels {
        s.push(',');
        s.push_str(l);
    }
    s.push('\n');
    for (i, l) in corr.labels.iter().enumerate() {
        s.push_str(l);
        for j in 0..corr.labels.len() {
            // `+ 0.0` turns -0 into 0
            s.push_str(&format!(",{:.4}", corr.values[(i, j)] + 0.0));
        }
        s.push('\n');
    }
    s
}

/// `metrics.csv` (one row per model) and `correlation.csv` (labelled
/// square matrix).
pub fn emit_plot_data(report: &RunReport, dir: &Path) -> AppResult<Vec<PathBuf>> {
    let metrics = dir.join("metrics.csv");
    let corr = dir.join("correlation.csv");
    write_file(&metrics, metrics_csv(&report.models).as_bytes())?;
    write_file(&corr, correlation_csv(&report.correlation).as_bytes())?;
    Ok(vec![metrics, corr])
}
