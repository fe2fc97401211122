//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any criterion fails or exceeds its time budget.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maternal::config::{ExperimentConfig, SmotePlacement, SourceKind};
use maternal::persist;
use maternal::run_experiment;
use maternal_core::data::GeneratorSpec;
use maternal_core::eval::{metrics, ConfusionMatrix};
use maternal_core::stats::pearson;
use maternal_core::tree::entropy;
use maternal_core::{rng, Matrix};
use rand::Rng;

type Outcome = Result<String, String>;

/// Marker for a criterion that could not run here.
const SKIP: &str = "SKIP:";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn metric_algebra() -> Outcome {
    let rows = [
        ("svc", ConfusionMatrix { tp: 64, fp: 3, fn_: 5, tn: 68 }),
        ("decision_tree", ConfusionMatrix { tp: 58, fp: 0, fn_: 11, tn: 71 }),
        ("random_forest", ConfusionMatrix { tp: 61, fp: 0, fn_: 8, tn: 71 }),
        ("gradient_boosting", ConfusionMatrix { tp: 62, fp: 0, fn_: 7, tn: 71 }),
        ("ann", ConfusionMatrix { tp: 62, fp: 0, fn_: 7, tn: 71 }),
    ];
    for ((name, cm), (rname, reported)) in rows.iter().zip(oracles::REPORTED) {
        assert_eq!(*name, rname);
        ensure(cm.total() == 140 && cm.tp + cm.fn_ == 69, || format!("{name}: counts"))?;
        let got = metrics(cm).map_err(|e| e.to_string())?.percentages();
        ensure(got == reported.map(String::from), || format!("{name}: {got:?} vs {reported:?}"))?;
        let inverted = oracles::invert_metrics(140, reported);
        ensure(inverted == vec![*cm], || format!("{name}: inversion gives {inverted:?}"))?;
    }
    Ok("5 rows reproduced; each inversion unique at n = 140".into())
}

fn synthetic_pipeline() -> Outcome {
    let spec = GeneratorSpec::mortality_default();
    for (name, target) in [
        ("rhinorrhea", 0.45),
        ("chills", 0.44),
        ("arthralgia", 0.42),
        ("odynophagia", 0.31),
        ("covid_diagnosis", 0.43),
    ] {
        let f = spec.features.iter().find(|f| f.name == name).ok_or(format!("no {name}"))?;
        let r = f.implied_correlation(spec.positive_rate);
        ensure((r - target).abs() < 1e-12, || format!("{name}: generator correlation {r}"))?;
    }
    let exp = run_experiment(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let r = &exp.report;
    ensure(r.models.len() == 5, || format!("{} models", r.models.len()))?;
    ensure(r.dataset.post_smote_ratio == 1.0, || format!("ratio {}", r.dataset.post_smote_ratio))?;
    let accs: Vec<String> = r.models.iter().map(|m| format!("{} {:.3}", m.model, m.metrics.accuracy)).collect();
    for m in &r.models {
        ensure(m.metrics.accuracy >= 0.80, || format!("{} accuracy {}", m.model, m.metrics.accuracy))?;
    }
    Ok(accs.join(", "))
}

fn gradients() -> Outcome {
    let worst = (0..20).map(|s| oracles::max_gradient_error(s, 150)).fold(0.0, f64::max);
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("20 seeds, max relative error {worst:.2e}"))
}

fn smote() -> Outcome {
    for seed in 0..200 {
        oracles::smote_case(seed)?;
    }
    Ok("200 datasets".into())
}

fn trees() -> Outcome {
    for seed in 0..200 {
        oracles::tree_oracle_case(seed)?;
    }
    let e = entropy(&[9, 5]).map_err(|e| e.to_string())?;
    ensure((e - 0.9403).abs() < 1e-4, || format!("H(9,5) = {e}"))?;
    for k in 1..=50 {
        ensure(entropy(&[k, k]).unwrap() == 1.0, || format!("H({k},{k}) != 1"))?;
    }
    Ok(format!("200 datasets; H(9,5) = {e:.4}"))
}

fn svm() -> Outcome {
    let [a, b, mid] = oracles::svm_two_point();
    ensure((a + 1.0).abs() < 1e-3 && (b - 1.0).abs() < 1e-3 && mid.abs() < 1e-3, || {
        format!("decision values {a}, {b}, {mid}")
    })?;
    for seed in 0..20 {
        oracles::svm_kkt_case(seed)?;
    }
    Ok(format!("f = ({a:.4}, {b:.4}, {mid:.4}); KKT on 20 sets"))
}

fn correlation() -> Outcome {
    for seed in 0..100 {
        oracles::correlation_case(seed)?;
    }
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(|e| e.to_string())?;
    ensure((r - 0.5).abs() <= 1e-12, || format!("pearson = {r}"))?;
    Ok("100 random matrices; pearson([1,2,3],[1,3,2]) = 0.5".into())
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::default();
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let b = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(a.report.to_json() == b.report.to_json(), || "reports differ".into())?;

    let mut r = rng::from_seed(1234);
    let d = a.schema.len();
    let grid = Matrix::from_vec(100, d, (0..100 * d).map(|_| r.gen_range(-0.5..1.5)).collect())
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for m in &a.models {
        let path = dir.path().join(format!("{}.json", m.kind()));
        persist::save_model(&path, m, &a.schema).map_err(|e| e.to_string())?;
        let (back, _) = persist::load_model(&path).map_err(|e| e.to_string())?;
        let before = m.predict_batch(&grid).map_err(|e| e.to_string())?;
        let after = back.predict_batch(&grid).map_err(|e| e.to_string())?;
        ensure(before == after, || format!("{} predictions changed", m.kind()))?;
    }
    Ok(format!("report {} bytes identical; 5 kinds round-trip", a.report.to_json().len()))
}

fn boosting() -> Outcome {
    for seed in 0..20 {
        oracles::gb_descent_case(seed)?;
        oracles::gb_prior_case(seed)?;
    }
    Ok("20 datasets".into())
}

pub const DATASET_VAR: &str = "MATERNAL_ORIGINAL_DATASET";

fn original_dataset() -> Outcome {
    let Some(path) = std::env::var_os(DATASET_VAR).map(PathBuf::from) else {
        return Ok(format!("{SKIP} set {DATASET_VAR} to a CSV in the documented schema"));
    };
    let mut cfg = ExperimentConfig::default();
    cfg.data.source = SourceKind::Csv;
    cfg.data.path = Some(path);
    cfg.smote.placement = SmotePlacement::BeforeSplit;
    let exp = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let corr = &exp.report.correlation;
    let mut seen = Vec::new();
    for (name, quoted) in [
        ("covid_diagnosis", 0.43),
        ("rhinorrhea", 0.45),
        ("chills", 0.44),
        ("odynophagia", 0.31),
        ("arthralgia", 0.42),
    ] {
        let r = corr.get(name, "mortality").ok_or(format!("no {name} column"))?;
        ensure((r - quoted).abs() <= 0.01, || format!("{name}: {r:.3} vs {quoted}"))?;
        seen.push(format!("{name} {r:.2}"));
    }
    Ok(seen.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome, u64); 10] = [
        (1, "metric algebra of the reported results", metric_algebra, 1),
        (2, "synthetic end-to-end run", synthetic_pipeline, 60),
        (3, "MLP gradients vs finite differences", gradients, 10),
        (4, "SMOTE invariants", smote, 10),
        (5, "tree oracle equivalence and entropy", trees, 20),
        (6, "SVM analytic case and KKT", svm, 10),
        (7, "correlation properties", correlation, 1),
        (8, "determinism and persistence", determinism, 30),
        (9, "boosting descent and prior collapse", boosting, 20),
        (10, "correlations on the original dataset", original_dataset, 120),
    ];
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (status, detail) = match outcome {
            Ok(d) if d.starts_with(SKIP) => ("SKIP", d[SKIP.len()..].trim().to_string()),
            Ok(d) if over => ("FAIL", format!("{d}; over {budget}s budget")),
            Ok(d) => ("PASS", d),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {id:>2} {status} [{:.2}s] {name}: {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
