//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use maternal_core::data::Dataset;
use maternal_core::model::{ModelKind, TrainedModel};
use maternal_core::Matrix;

use crate::config::{ExperimentConfig, SmotePlacement, SourceKind};
use crate::csv_io;
use crate::error::{AppError, AppResult};
use crate::persist;
use crate::pipeline;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "maternal", version, about = "Train and evaluate mortality-risk classifiers on symptom data")]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log progress to stderr (`RUST_LOG` also works).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    Synth {
        /// Row count (default: data.rows).
        #[arg(long)]
        rows: Option<usize>,
        /// Fraction of feature cells left blank.
        #[arg(long)]
        missing_rate: Option<f64>,
        /// Output file (default: OUT/synthetic.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the feature/label correlation matrix.
    Correlate(DataArg),
    /// Fit one model on a dataset and save it.
    Train {
        /// svc, decision_tree, random_forest, gradient_boosting or ann.
        #[arg(long)]
        model: ModelKind,
        #[command(flatten)]
        data: DataArg,
        /// Model file (default: OUT/MODEL.json).
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Score a saved model on a labelled CSV.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Print the class and score of each input row.
    Predict {
        #[arg(long)]
        model_file: PathBuf,
        /// CSV with the schema's feature columns.
        #[arg(long, conflicts_with = "row")]
        data: Option<PathBuf>,
        /// Comma-separated feature values; repeatable.
        #[arg(long, required_unless_present = "data")]
        row: Vec<String>,
        /// Write `class,score` CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the whole experiment and write report, plot data and models.
    Run {
        /// Oversample the whole dataset before splitting.
        #[arg(long)]
        smote_before_split: bool,
    },
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Input CSV (default: the configured data source).
    #[arg(long)]
    pub data: Option<PathBuf>,
}

pub fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

impl Cli {
    /// Configuration file (or defaults) with the command-line overrides.
    pub fn config(&self) -> AppResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn dataset_from(cfg: &ExperimentConfig, data: &DataArg) -> AppResult<Dataset> {
    let mut cfg = cfg.clone();
    if let Some(p) = &data.data {
        cfg.data.source = SourceKind::Csv;
        cfg.data.path = Some(p.clone());
    }
    let table = pipeline::load_source(&cfg)?;
    pipeline::clean(&table, &cfg.data.schema()?, cfg.data.impute)
}

fn print(text: &str) -> AppResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| AppError::io("<stdout>", e))
}

pub fn run(cli: &Cli) -> AppResult<()> {
    let cfg = cli.config()?;
    let out = cli.out_dir(&cfg);
    match &cli.command {
        Command::Synth {
            rows,
            missing_rate,
            output,
        } => {
            let mut cfg = cfg.clone();
            cfg.data.source = SourceKind::Synthetic;
            if let Some(r) = rows {
                cfg.data.rows = *r;
            }
            if let Some(m) = missing_rate {
                cfg.data.missing_rate = *m;
            }
            cfg.validate()?;
            let table = pipeline::load_source(&cfg)?;
            let path = output.clone().unwrap_or_else(|| out.join("synthetic.csv"));
            csv_io::write_table(&path, &table)?;
            print(&format!("{}\n", path.display()))
        }
        Command::Correlate(data) => {
            let ds = dataset_from(&cfg, data)?;
            let corr = pipeline::correlate(&ds)?;
            let text = report::correlation_csv(&corr);
            csv_io::write_file(&out.join("correlation.csv"), text.as_bytes())?;
            print(&text)
        }
        Command::Train {
            model,
            data,
            model_out,
        } => {
            let cfg = cfg.resolved();
            let mut ds = dataset_from(&cfg, data)?;
            if cfg.smote.enabled {
                ds = maternal_core::resample::smote(&ds, &pipeline::smote_config(&cfg))
                    .map_err(|source| AppError::Stage {
                        stage: crate::error::Stage::Smote,
                        source,
                    })?
                    .dataset;
            }
            let (trained, warning) = pipeline::fit(&cfg.models.spec(*model), &ds)?;
            if let Some(w) = warning {
                log::warn!("{w}");
            }
            let path = model_out.clone().unwrap_or_else(|| out.join(format!("{model}.json")));
            persist::save_model(&path, &trained, ds.schema())?;
            print(&format!("{}\n", path.display()))
        }
        Command::Evaluate { model_file, data } => {
            let (model, schema) = persist::load_model(model_file)?;
            let table = csv_io::read_table(data)?;
            let ds = pipeline::clean(&table, &schema, cfg.data.impute)?;
            let r = pipeline::evaluate(&model, &ds)?;
            let c = &r.confusion;
            print(&format!(
                "model {}\naccuracy {}%\nprecision {}%\nrecall {}%\nf1 {}%\ntp {} fp {} fn {} tn {}\n",
                r.model, r.percent[0], r.percent[1], r.percent[2], r.percent[3], c.tp, c.fp, c.fn_, c.tn
            ))
        }
        Command::Predict {
            model_file,
            data,
            row,
            output,
        } => {
            let (model, schema) = persist::load_model(model_file)?;
            let x = match data {
                Some(p) => csv_io::feature_matrix(&csv_io::read_table(p)?, &schema)?,
                None => {
                    let rows = row
                        .iter()
                        .map(|r| csv_io::parse_row(r, &schema))
                        .collect::<AppResult<Vec<_>>>()?;
                    Matrix::from_rows(&rows).map_err(|e| AppError::Data(e.to_string()))?
                }
            };
            let text = predictions_csv(&model, &x)?;
            match output {
                Some(p) => csv_io::write_file(p, format!("class,score\n{text}").as_bytes()),
                None => print(&text),
            }
        }
        Command::Run { smote_before_split } => {
            let mut cfg = cfg.clone();
            if *smote_before_split {
                cfg.smote.enabled = true;
                cfg.smote.placement = SmotePlacement::BeforeSplit;
            }
            let exp = pipeline::run_experiment(&cfg)?;
            let written = pipeline::write_outputs(&exp, &out)?;
            for p in &written {
                info!("wrote {}", p.display());
            }
            print(&summary(&exp.report, &out))
        }
    }
}

/// One `class,score` line per row of `x`.
pub fn predictions_csv(model: &TrainedModel, x: &Matrix) -> AppResult<String> {
    if x.rows() > 0 && x.cols() == 0 {
        return Err(AppError::Data("no feature values".into()));
    }
    let preds = model.predict_batch(x).map_err(|e| AppError::Data(e.to_string()))?;
    Ok(preds.iter().map(|(c, s)| format!("{c},{s}\n")).collect())
}

fn summary(r: &report::RunReport, dir: &Path) -> String {
    let mut s = format!(
        "config {}\nrows {} (train {}, test {}), post-SMOTE ratio {:.4}\n{:<18} {:>8} {:>9} {:>8} {:>8}\n",
        &r.config_hash[..12],
        r.dataset.rows_loaded,
        r.dataset.train_rows,
        r.dataset.test_rows,
        r.dataset.post_smote_ratio,
        "model",
        "accuracy",
        "precision",
        "recall",
        "f1"
    );
    for m in &r.models {
        s.push_str(&format!(
            "{:<18} {:>8} {:>9} {:>8} {:>8}\n",
            m.model.name(),
            m.percent[0],
            m.percent[1],
            m.percent[2],
            m.percent[3]
        ));
    }
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s.push_str(&format!("outputs in {}\n", dir.display()));
    s
}
