//! The experiment: load or synthesise, impute, select features, oversample,
//! split, train, evaluate, report.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use maternal_core::data::{self, Dataset, FeatureSchema, RawTable, SplitPair};
use maternal_core::ensemble::{self, ForestModel};
use maternal_core::eval;
use maternal_core::model::{ModelSpec, TrainedModel};
use maternal_core::resample::{self, SmoteConfig};
use maternal_core::rng::derive_seed;
use maternal_core::stats::{self, CorrelationMatrix};
use maternal_core::Error;
use rayon::prelude::*;

use crate::config::{streams, ExperimentConfig, SmotePlacement, SourceKind};
use crate::csv_io;
use crate::error::{AppError, AppResult, AtStage, Stage};
use crate::report::{DatasetSummary, ModelReport, RunReport, REPORT_VERSION};

/// Accumulates stage names and warnings as the pipeline runs.
#[derive(Debug, Default)]
struct Trace {
    stages: Vec<String>,
    warnings: Vec<String>,
}

impl Trace {
    fn enter(&mut self, stage: &str) {
        info!("stage: {stage}");
        self.stages.push(stage.to_string());
    }

    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Raw table from the configured source.
pub fn load_source(cfg: &ExperimentConfig) -> AppResult<RawTable> {
    match cfg.data.source {
        SourceKind::Csv => {
            let path = cfg.data.path.as_deref().ok_or_else(|| AppError::Config("data.path not set".into()))?;
            csv_io::read_table(path)
        }
        SourceKind::Synthetic => {
            let spec = cfg.data.generator_spec();
            let ds = data::synthesize(&spec, cfg.data.rows, derive_seed(cfg.seed, streams::SYNTH)).at(Stage::Load)?;
            let mut table = ds.to_raw_table();
            if cfg.data.missing_rate > 0.0 {
                let cols: Vec<usize> = (0..ds.d()).collect();
                table
                    .inject_missing(&cols, cfg.data.missing_rate, derive_seed(cfg.seed, streams::MISSING))
                    .at(Stage::Load)?;
            }
            Ok(table)
        }
    }
}

/// Imputation (if enabled) and projection onto the schema.
pub fn clean(table: &RawTable, schema: &FeatureSchema, impute: bool) -> AppResult<Dataset> {
    let imputed;
    let table = if impute {
        imputed = data::impute_mean(table).at(Stage::Impute)?;
        &imputed
    } else {
        table
    };
    data::select_features(table, schema).at(Stage::SelectFeatures)
}

pub fn smote_config(cfg: &ExperimentConfig) -> SmoteConfig {
    SmoteConfig {
        k: cfg.smote.k,
        seed: derive_seed(cfg.seed, streams::SMOTE),
        ..Default::default()
    }
}

fn oversample(ds: &Dataset, cfg: &ExperimentConfig, trace: &mut Trace) -> AppResult<(Dataset, usize)> {
    let out = resample::smote(ds, &smote_config(cfg)).at(Stage::Smote)?;
    if out.k_clamped {
        trace.warn(format!(
            "smote: k = {} reduced to {} (minority class has {} rows)",
            cfg.smote.k,
            out.effective_k,
            out.effective_k + 1
        ));
    }
    Ok((out.dataset, out.synthetic_rows))
}

fn split(ds: &Dataset, cfg: &ExperimentConfig) -> AppResult<SplitPair> {
    let seed = derive_seed(cfg.seed, streams::SPLIT);
    if cfg.split.stratified {
        data::split_stratified(ds, cfg.split.train_ratio, seed)
    } else {
        data::split(ds, cfg.split.train_ratio, seed)
    }
    .at(Stage::Split)
}

/// Fits one model. Forest trees are fitted in parallel; an SVM that runs
/// out of sweeps keeps its best iterate with a warning.
pub fn fit(spec: &ModelSpec, train: &Dataset) -> AppResult<(TrainedModel, Option<String>)> {
    let stage = Stage::Train(spec.kind());
    match spec {
        ModelSpec::RandomForest(cfg) => {
            let trees = (0..cfg.n_trees)
                .into_par_iter()
                .map(|i| ensemble::fit_forest_tree(train, cfg, i))
                .collect::<maternal_core::Result<Vec<_>>>()
                .at(stage)?;
            Ok((
                TrainedModel::RandomForest(ForestModel {
                    trees,
                    config: cfg.clone(),
                }),
                None,
            ))
        }
        _ => match spec.fit(train) {
            Ok(m) => Ok((m, None)),
            Err(Error::SvmNotConverged { sweeps, model }) => Ok((
                (*model).into(),
                Some(format!("svc: no convergence after {sweeps} sweeps; using the last iterate")),
            )),
            Err(e) => Err(AppError::Stage { stage, source: e }),
        },
    }
}

pub fn evaluate(model: &TrainedModel, test: &Dataset) -> AppResult<ModelReport> {
    let stage = Stage::Evaluate(model.kind());
    let pred: Vec<u8> = model
        .predict_batch(test.features())
        .at(stage)?
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    let confusion = eval::confusion(test.labels(), &pred).at(stage)?;
    let metrics = eval::metrics(&confusion).at(stage)?;
    Ok(ModelReport {
        model: model.kind(),
        confusion,
        percent: metrics.percentages(),
        metrics,
    })
}

pub fn correlate(ds: &Dataset) -> AppResult<CorrelationMatrix> {
    stats::correlation_matrix(ds).at(Stage::Correlate)
}

/// Everything a run produces.
#[derive(Debug)]
pub struct Experiment {
    pub report: RunReport,
    pub models: Vec<TrainedModel>,
    pub schema: FeatureSchema,
}

fn ratio(counts: [usize; 2]) -> f64 {
    let (lo, hi) = (counts[0].min(counts[1]), counts[0].max(counts[1]));
    if hi == 0 {
        0.0
    } else {
        lo as f64 / hi as f64
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> AppResult<Experiment> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let schema = cfg.data.schema()?;
    let mut trace = Trace::default();

    trace.enter("load");
    let table = load_source(&cfg)?;
    let missing_cells = table.missing_count();
    if cfg.data.impute {
        trace.enter("impute");
    }
    trace.enter("select_features");
    let full = clean(&table, &schema, cfg.data.impute)?;
    let correlation = correlate(&full)?;
    let class_counts = full.class_counts();

    let placement = cfg.smote.enabled.then_some(cfg.smote.placement);
    let mut synthetic_rows = 0;
    let mut post_smote = class_counts;
    let pair = match placement {
        Some(SmotePlacement::BeforeSplit) => {
            trace.enter("smote");
            let (balanced, added) = oversample(&full, &cfg, &mut trace)?;
            synthetic_rows = added;
            post_smote = balanced.class_counts();
            trace.enter("split");
            split(&balanced, &cfg)?
        }
        Some(SmotePlacement::TrainOnly) => {
            trace.enter("split");
            let mut pair = split(&full, &cfg)?;
            trace.enter("smote");
            let (balanced, added) = oversample(&pair.train, &cfg, &mut trace)?;
            synthetic_rows = added;
            post_smote = balanced.class_counts();
            pair.train = balanced;
            pair
        }
        None => {
            trace.enter("split");
            split(&full, &cfg)?
        }
    };

    let kinds = cfg.models.enabled();
    trace.enter("train");
    let fitted = kinds
        .par_iter()
        .map(|&kind| {
            let start = Instant::now();
            let (model, warning) = fit(&cfg.models.spec(kind), &pair.train)?;
            info!("trained {kind}");
            Ok((model, warning, start.elapsed().as_secs_f64()))
        })
        .collect::<AppResult<Vec<_>>>()?;

    trace.enter("evaluate");
    let mut models = Vec::with_capacity(fitted.len());
    let mut reports = Vec::with_capacity(fitted.len());
    let mut timings = Vec::with_capacity(fitted.len());
    for (model, warning, secs) in fitted {
        if let Some(w) = warning {
            trace.warn(w);
        }
        reports.push(evaluate(&model, &pair.test)?);
        timings.push((model.kind(), secs));
        models.push(model);
    }
    trace.enter("report");

    let dataset = DatasetSummary {
        rows_loaded: table.n_rows(),
        missing_cells,
        class_counts,
        smote_placement: placement,
        synthetic_rows,
        post_smote_class_counts: post_smote,
        post_smote_ratio: ratio(post_smote),
        train_rows: pair.train.n(),
        test_rows: pair.test.n(),
        train_class_counts: pair.train.class_counts(),
        test_class_counts: pair.test.class_counts(),
    };
    let report = RunReport {
        report_version: REPORT_VERSION,
        config_hash: cfg.hash(),
        config: cfg,
        stages: trace.stages,
        warnings: trace.warnings,
        dataset,
        correlation,
        models: reports,
        timings,
    };
    Ok(Experiment { report, models, schema })
}

/// Writes the report, plot data and one model file per model into `dir`.
pub fn write_outputs(exp: &Experiment, dir: &Path) -> AppResult<Vec<std::path::PathBuf>> {
    let mut written = crate::report::write_report(&exp.report, dir)?;
    written.extend(crate::report::emit_plot_data(&exp.report, dir)?);
    for m in &exp.models {
        let path = dir.join("models").join(format!("{}.json", m.kind()));
        crate::persist::save_model(&path, m, &exp.schema)?;
        written.push(path);
    }
    Ok(written)
}
