//! Independent reference implementations used by the integration tests and
//! the acceptance suite. Nothing here calls into the code it checks except
//! to obtain the value under test.
#![allow(dead_code)]

use maternal_core::data::Dataset;
use maternal_core::ensemble::{self, GbConfig};
use maternal_core::eval::ConfusionMatrix;
use maternal_core::nnet::{self, NetParams};
use maternal_core::resample::{self, SmoteConfig};
use maternal_core::svm::{self, KernelSpec, SvmConfig};
use maternal_core::tree::{self, TreeConfig};
use maternal_core::{rng, Matrix};
use rand::Rng;

pub type Check = Result<(), String>;

fn case_rng(seed: u64) -> rng::Rng {
    rng::from_seed(seed ^ 0x05ee_d0f0_ac1e)
}

// ---------------------------------------------------------------- trees

fn oracle_entropy(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

enum OracleTree {
    Leaf(u8),
    Split(usize, f64, Box<OracleTree>, Box<OracleTree>),
}

/// Exhaustive search: every feature, every midpoint between distinct
/// observed values, partitions recounted from scratch.
fn oracle_grow(x: &[Vec<f64>], y: &[u8], rows: &[usize], depth: usize, max_depth: usize) -> OracleTree {
    let mut counts = [0usize; 2];
    for &i in rows {
        counts[usize::from(y[i])] += 1;
    }
    let majority = u8::from(counts[1] > counts[0]);
    if depth >= max_depth || rows.len() < 2 || counts[0] == 0 || counts[1] == 0 {
        return OracleTree::Leaf(majority);
    }
    let h = oracle_entropy(counts);
    let n = rows.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut l, mut r) = ([0usize; 2], [0usize; 2]);
            for &i in rows {
                if x[i][f] <= t {
                    l[usize::from(y[i])] += 1;
                } else {
                    r[usize::from(y[i])] += 1;
                }
            }
            let nl = (l[0] + l[1]) as f64;
            let nr = (r[0] + r[1]) as f64;
            let gain = h - nl / n * oracle_entropy(l) - nr / n * oracle_entropy(r);
            let better = match best {
                None => gain > 1e-12,
                Some((g, _, _)) => gain > g + 1e-12,
            };
            if better {
                best = Some((gain, f, t));
            }
        }
    }
    match best {
        None => OracleTree::Leaf(majority),
        Some((_, f, t)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= t);
            OracleTree::Split(
                f,
                t,
                Box::new(oracle_grow(x, y, &l, depth + 1, max_depth)),
                Box::new(oracle_grow(x, y, &r, depth + 1, max_depth)),
            )
        }
    }
}

fn oracle_predict(t: &OracleTree, row: &[f64]) -> u8 {
    match t {
        OracleTree::Leaf(c) => *c,
        OracleTree::Split(f, th, l, r) => oracle_predict(if row[*f] <= *th { l } else { r }, row),
    }
}

/// Random dataset with `n ≤ 8`, `d ≤ 3`, values on a coarse grid so ties
/// and duplicate rows are common.
pub fn tree_oracle_case(seed: u64) -> Check {
    let mut rng = case_rng(seed);
    let n = rng.gen_range(1..=8);
    let d = rng.gen_range(1..=3);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.gen_range(0..4u8)) * 0.5).collect())
        .collect();
    let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let max_depth = rng.gen_range(1..=4);

    let ds = Dataset::from_rows(&x, &y).map_err(|e| e.to_string())?;
    let cfg = TreeConfig {
        max_depth,
        ..TreeConfig::classification()
    };
    let fitted = tree::fit_tree(&ds, &cfg, None).map_err(|e| e.to_string())?;
    let reference = oracle_grow(&x, &y, &(0..n).collect::<Vec<_>>(), 0, max_depth);
    for row in &x {
        let got = tree::predict_class(&fitted, row).map_err(|e| e.to_string())?.0;
        let want = oracle_predict(&reference, row);
        if got != want {
            return Err(format!("seed {seed}: row {row:?} predicted {got}, oracle {want}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- MLP

fn loss_at(params: &NetParams, x: &Matrix, y: &[u8]) -> f64 {
    let cache = nnet::forward(params, x, None).unwrap();
    nnet::sparse_ce_loss(&cache.probs, y).unwrap()
}

fn min_abs_preactivation(params: &NetParams, x: &Matrix) -> f64 {
    let c = nnet::forward(params, x, None).unwrap();
    c.z1.as_slice()
        .iter()
        .chain(c.z2.as_slice())
        .fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

/// Relative error with the denominator floored at `1e−5`, so gradients that
/// are zero up to rounding are compared in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

/// Parameters and a batch whose ReLU pre-activations all sit at least
/// `1e−3` from the kink, so a step of `1e−5` never crosses it.
fn gradient_problem(seed: u64, h1: usize, h2: usize) -> (NetParams, Matrix, Vec<u8>) {
    let mut rng = case_rng(seed);
    let d = rng.gen_range(2..=6);
    let mut params = NetParams::init_with_hidden(d, h1, h2, rng.gen()).unwrap();
    for b in [&mut params.b1, &mut params.b2, &mut params.b3] {
        for v in b.iter_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
    }
    loop {
        let batch = rng.gen_range(1..=6);
        let data = (0..batch * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x = Matrix::from_vec(batch, d, data).unwrap();
        if min_abs_preactivation(&params, &x) > 1e-3 {
            let y = (0..batch).map(|_| rng.gen_range(0..2)).collect();
            return (params, x, y);
        }
    }
}

/// Largest relative error between backprop and central differences
/// (`h = 1e−5`) over every parameter of a narrow network, plus `sampled`
/// random parameters of a full-width one.
pub fn max_gradient_error(seed: u64, sampled: usize) -> f64 {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut check = |params: &NetParams, x: &Matrix, y: &[u8], picks: Option<(usize, u64)>| {
        let cache = nnet::forward(params, x, None).unwrap();
        let grads = nnet::backward(params, &cache, y).unwrap();
        let flat_grads: Vec<(usize, usize, f64)> = grads
            .tensors()
            .iter()
            .enumerate()
            .flat_map(|(t, g)| g.iter().enumerate().map(move |(k, v)| (t, k, *v)))
            .collect();
        let chosen: Vec<usize> = match picks {
            None => (0..flat_grads.len()).collect(),
            Some((count, s)) => {
                let mut r = case_rng(s);
                (0..count).map(|_| r.gen_range(0..flat_grads.len())).collect()
            }
        };
        let mut p = params.clone();
        for idx in chosen {
            let (t, k, analytic) = flat_grads[idx];
            let orig = p.tensors()[t][k];
            p.tensors_mut()[t][k] = orig + h;
            let up = loss_at(&p, x, y);
            p.tensors_mut()[t][k] = orig - h;
            let down = loss_at(&p, x, y);
            p.tensors_mut()[t][k] = orig;
            worst = worst.max(relative_error(analytic, (up - down) / (2.0 * h)));
        }
    };
    let (small, x, y) = gradient_problem(seed, 8, 6);
    check(&small, &x, &y, None);
    if sampled > 0 {
        let (full, x, y) = gradient_problem(seed.wrapping_add(1 << 32), nnet::HIDDEN1, nnet::HIDDEN2);
        check(&full, &x, &y, Some((sampled, seed)));
    }
    worst
}

// ---------------------------------------------------------------- SVM

/// Linearly separable set: two Gaussian blobs either side of a random
/// hyperplane, with a margin band cleared.
pub fn separable_set(seed: u64) -> Dataset {
    let mut rng = case_rng(seed);
    let d = rng.gen_range(2..=4);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n = rng.gen_range(10..=30);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
        if s.abs() < 0.5 {
            continue;
        }
        labels.push(u8::from(s > 0.0));
        rows.push(x);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        labels[0] = 1 - labels[0];
        rows[0] = rows[0].iter().map(|v| -v).collect();
    }
    Dataset::from_rows(&rows, &labels).unwrap()
}

/// Box constraints, `Σαy = 0`, and complementary slackness within `tol`.
pub fn kkt_check(ds: &Dataset, model: &svm::SvmModel, tol: f64) -> Check {
    let n = ds.n();
    let mut alpha = vec![0.0; n];
    for (&i, &a) in model.support_indices.iter().zip(&model.alphas) {
        alpha[i] = a;
    }
    let y: Vec<f64> = ds.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let balance: f64 = alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
    if balance.abs() > tol {
        return Err(format!("sum alpha*y = {balance}"));
    }
    for i in 0..n {
        let a = alpha[i];
        if a < 0.0 || a > model.c {
            return Err(format!("alpha[{i}] = {a} outside [0, C]"));
        }
        let m = y[i] * svm::decision_function(model, ds.row(i)).unwrap();
        let ok = if a == 0.0 {
            m >= 1.0 - tol
        } else if a < model.c {
            (m - 1.0).abs() <= tol
        } else {
            m <= 1.0 + tol
        };
        if !ok {
            return Err(format!("row {i}: alpha {a}, margin {m}"));
        }
    }
    Ok(())
}

pub fn svm_kkt_case(seed: u64) -> Check {
    let ds = separable_set(seed);
    let cfg = SvmConfig {
        c: 10.0,
        kernel: KernelSpec::Linear,
        tol: 1e-4,
        seed,
        ..Default::default()
    };
    let model = svm::fit_svm(&ds, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
    kkt_check(&ds, &model, 1e-2).map_err(|e| format!("seed {seed}: {e}"))?;
    for i in 0..ds.n() {
        if svm::predict_svm(&model, ds.row(i)).unwrap() != ds.labels()[i] {
            return Err(format!("seed {seed}: training row {i} misclassified"));
        }
    }
    Ok(())
}

/// Decision values at (0,0), (2,2) and the midpoint (1,1).
pub fn svm_two_point() -> [f64; 3] {
    let ds = Dataset::from_rows(&[[0.0, 0.0], [2.0, 2.0]], &[0, 1]).unwrap();
    let cfg = SvmConfig {
        c: 1000.0,
        kernel: KernelSpec::Linear,
        ..Default::default()
    };
    let m = svm::fit_svm(&ds, &cfg).unwrap();
    [[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]].map(|p| svm::decision_function(&m, &p).unwrap())
}

// ---------------------------------------------------------------- SMOTE

fn brute_knn(points: &[Vec<f64>], q: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..points.len())
        .filter(|&i| i != q)
        .map(|i| {
            let s: f64 = points[q].iter().zip(&points[i]).map(|(a, b)| (a - b).powi(2)).sum();
            (s, i)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// `s = a + λ(b − a)` for some `λ ∈ [0, 1]`, checked coordinate-wise.
fn on_segment(s: &[f64], a: &[f64], b: &[f64]) -> bool {
    let pivot = (0..a.len()).max_by(|&i, &j| (b[i] - a[i]).abs().total_cmp(&(b[j] - a[j]).abs()));
    let Some(p) = pivot else { return true };
    let span = b[p] - a[p];
    let lambda = if span == 0.0 { 0.0 } else { (s[p] - a[p]) / span };
    if !(-1e-12..=1.0 + 1e-12).contains(&lambda) {
        return false;
    }
    (0..a.len()).all(|i| (a[i] + lambda * (b[i] - a[i]) - s[i]).abs() <= 1e-9 * (1.0 + a[i].abs() + b[i].abs()))
}

pub fn smote_case(seed: u64) -> Check {
    let mut rng = case_rng(seed);
    let d = rng.gen_range(1..=5);
    let minority = rng.gen_range(2..=12);
    let majority = rng.gen_range(minority..=40);
    let minority_class: u8 = rng.gen_range(0..2);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..minority + majority {
        let label = if i < minority { minority_class } else { 1 - minority_class };
        rows.push((0..d).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<f64>>());
        labels.push(label);
    }
    // interleave so originals are not grouped by class
    for i in (1..rows.len()).rev() {
        let j = rng.gen_range(0..=i);
        rows.swap(i, j);
        labels.swap(i, j);
    }
    let ds = Dataset::from_rows(&rows, &labels).unwrap();
    let k = rng.gen_range(1..=7);
    let out = resample::smote(&ds, &SmoteConfig { k, seed, ..Default::default() }).map_err(|e| e.to_string())?;
    let fail = |m: String| Err(format!("seed {seed}: {m}"));

    let counts = out.dataset.class_counts();
    if counts[0] != counts[1] {
        return fail(format!("counts {counts:?}"));
    }
    for i in 0..ds.n() {
        if out.dataset.row(i) != ds.row(i) || out.dataset.labels()[i] != ds.labels()[i] {
            return fail(format!("original row {i} changed"));
        }
    }
    let minority_points: Vec<Vec<f64>> = (0..ds.n())
        .filter(|&i| labels[i] == minority_class)
        .map(|i| rows[i].clone())
        .collect();
    let k_eff = k.min(minority_points.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..minority_points.len()).map(|q| brute_knn(&minority_points, q, k_eff)).collect();
    for s in ds.n()..out.dataset.n() {
        if out.dataset.labels()[s] != minority_class {
            return fail(format!("synthetic row {s} has the majority label"));
        }
        let p = out.dataset.row(s);
        let found = neighbours.iter().enumerate().any(|(a, nbs)| {
            nbs.iter().any(|&b| on_segment(p, &minority_points[a], &minority_points[b]))
        });
        if !found {
            return fail(format!("synthetic row {s} = {p:?} lies on no neighbour segment"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- correlation

pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Symmetry, unit diagonal, range, affine invariance and agreement with
/// the naive formula, on a random dataset.
pub fn correlation_case(seed: u64) -> Check {
    use maternal_core::stats;
    let mut rng = case_rng(seed);
    let n = rng.gen_range(3..=40);
    let d = rng.gen_range(1..=6);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect()).collect();
    let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let ds = Dataset::from_rows(&rows, &labels).unwrap();
    let m = stats::correlation_matrix(&ds).map_err(|e| e.to_string())?;
    let k = d + 1;
    let column = |j: usize| -> Vec<f64> {
        if j < d {
            rows.iter().map(|r| r[j]).collect()
        } else {
            labels.iter().map(|&l| f64::from(l)).collect()
        }
    };
    for i in 0..k {
        if m.values[(i, i)] != 1.0 {
            return Err(format!("seed {seed}: diagonal {i} = {}", m.values[(i, i)]));
        }
        for j in 0..k {
            let v = m.values[(i, j)];
            if (v - m.values[(j, i)]).abs() > 1e-12 || !(-1.0..=1.0).contains(&v) {
                return Err(format!("seed {seed}: entry ({i},{j}) = {v}"));
            }
            if i != j && (v - naive_pearson(&column(i), &column(j))).abs() > 1e-10 {
                return Err(format!("seed {seed}: entry ({i},{j}) disagrees with naive formula"));
            }
        }
    }
    let x = column(0);
    let y = column(d);
    let a = rng.gen_range(0.1..5.0) * if rng.gen() { 1.0 } else { -1.0 };
    let b = rng.gen_range(-100.0..100.0);
    let c = rng.gen_range(0.1..5.0);
    let e = rng.gen_range(-100.0..100.0);
    let r = stats::pearson(&x, &y).unwrap();
    let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
    let yt: Vec<f64> = y.iter().map(|v| c * v + e).collect();
    let rt = stats::pearson(&xt, &yt).unwrap();
    if (rt - a.signum() * r).abs() > 1e-10 {
        return Err(format!("seed {seed}: affine transform moved r from {r} to {rt}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- boosting

pub fn noisy_binary_set(seed: u64) -> Dataset {
    let mut rng = case_rng(seed);
    let n = rng.gen_range(20..=80);
    let d = rng.gen_range(1..=4);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = 1.0 / (1.0 + (-2.0 * x.iter().sum::<f64>()).exp());
        labels.push(u8::from(rng.gen::<f64>() < p));
        rows.push(x);
    }
    labels[0] = 0;
    labels[1] = 1;
    Dataset::from_rows(&rows, &labels).unwrap()
}

/// Training log-loss after each stage never increases (up to `1e−12`).
pub fn gb_descent_case(seed: u64) -> Check {
    let ds = noisy_binary_set(seed);
    let cfg = GbConfig {
        n_estimators: 30,
        seed,
        ..Default::default()
    };
    let model = ensemble::fit_gb(&ds, &cfg).map_err(|e| e.to_string())?;
    let staged: Vec<Vec<f64>> = (0..ds.n()).map(|i| ensemble::staged_scores(&model, ds.row(i)).unwrap()).collect();
    let mut previous = f64::INFINITY;
    for stage in 0..=model.stages.len() {
        let scores: Vec<f64> = staged.iter().map(|s| s[stage]).collect();
        let loss = oracle_log_loss(&scores, ds.labels());
        if loss > previous + 1e-12 {
            return Err(format!("seed {seed}: loss rose from {previous} to {loss} at stage {stage}"));
        }
        previous = loss;
    }
    Ok(())
}

fn oracle_log_loss(scores: &[f64], labels: &[u8]) -> f64 {
    scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            let p = 1.0 / (1.0 + (-f).exp());
            -(f64::from(y) * p.ln() + (1.0 - f64::from(y)) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / scores.len() as f64
}

/// With `η = 0` every prediction equals the training positive rate.
pub fn gb_prior_case(seed: u64) -> Check {
    let ds = noisy_binary_set(seed);
    let model = ensemble::fit_gb(&ds, &GbConfig { learning_rate: 0.0, n_estimators: 5, seed, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let prior = ds.labels().iter().filter(|&&l| l == 1).count() as f64 / ds.n() as f64;
    for i in 0..ds.n() {
        let p = ensemble::predict_gb(&model, ds.row(i)).unwrap().1;
        if p != prior {
            return Err(format!("seed {seed}: row {i} got {p}, prior {prior}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- metrics

/// Reported percentages per model: accuracy, precision, recall, F1.
pub const REPORTED: [(&str, [&str; 4]); 5] = [
    ("svc", ["94.29", "95.52", "92.75", "94.12"]),
    ("decision_tree", ["92.14", "100.00", "84.06", "91.34"]),
    ("random_forest", ["94.29", "100.00", "88.41", "93.85"]),
    ("gradient_boosting", ["95.00", "100.00", "89.86", "94.66"]),
    ("ann", ["95.00", "100.00", "89.86", "94.66"]),
];

fn pct(num: usize, den: usize) -> Option<String> {
    (den > 0).then(|| format!("{:.2}", 100.0 * num as f64 / den as f64))
}

/// Every `(tp, fp, fn, tn)` summing to `n` whose two-decimal percentages
/// equal `reported`, computed from exact integer fractions.
pub fn invert_metrics(n: usize, reported: [&str; 4]) -> Vec<ConfusionMatrix> {
    let mut out = Vec::new();
    for tp in 0..=n {
        for fp in 0..=n - tp {
            if pct(tp, tp + fp).as_deref() != Some(reported[1]) {
                continue;
            }
            for fn_ in 0..=n - tp - fp {
                let tn = n - tp - fp - fn_;
                let p = tp as f64 / (tp + fp) as f64;
                let Some(r) = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64) else { continue };
                let f1 = if p + r > 0.0 { format!("{:.2}", 100.0 * 2.0 * p * r / (p + r)) } else { continue };
                if pct(tp + tn, n).as_deref() == Some(reported[0])
                    && pct(tp, tp + fn_).as_deref() == Some(reported[2])
                    && f1 == reported[3]
                {
                    out.push(ConfusionMatrix { tp, fp, fn_, tn });
                }
            }
        }
    }
    out
}
