//! Soft-margin binary SVM trained with sequential minimal optimization.
//!
//! Simplified Platt SMO: each sweep visits every multiplier that violates
//! the KKT conditions by more than `tol` and pairs it with a second index,
//! first a random one and then, if that pair makes no progress, every other
//! index in turn. Training ends after `max_passes` consecutive sweeps with
//! no update.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::exp;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{rng, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

/// Kernel choice in a config; an RBF without `gamma` uses `1/d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: Option<f64> },
}

impl KernelSpec {
    pub fn resolve(self, d: usize) -> Result<Kernel> {
        match self {
            KernelSpec::Linear => Ok(Kernel::Linear),
            KernelSpec::Rbf { gamma } => {
                let gamma = gamma.unwrap_or(1.0 / d.max(1) as f64);
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("rbf gamma {gamma} must be > 0")));
                }
                Ok(Kernel::Rbf { gamma })
            }
        }
    }
}

pub fn kernel_eval(kernel: Kernel, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(kernel_unchecked(kernel, x, z))
}

fn kernel_unchecked(kernel: Kernel, x: &[f64], z: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
        Kernel::Rbf { gamma } => {
            let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            exp(-gamma * d2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    pub max_passes: usize,
    /// Sweep budget before training gives up with `SvmNotConverged`.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: KernelSpec::Rbf { gamma: None },
            tol: 1e-3,
            max_passes: 10,
            max_sweeps: 10_000,
            seed: 0,
        }
    }
}

/// Dual solution restricted to the support vectors (`α > 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Matrix,
    pub alphas: Vec<f64>,
    /// ±1 labels of the support vectors.
    pub labels_pm: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    pub b: f64,
    pub c: f64,
    pub kernel: Kernel,
}

impl SvmModel {
    pub fn validate(&self, width: usize) -> Result<()> {
        let n = self.alphas.len();
        if self.support_vectors.rows() != n || self.labels_pm.len() != n || self.support_indices.len() != n {
            return Err(Error::CorruptModel("support vector arrays disagree in length".into()));
        }
        if n > 0 && self.support_vectors.cols() != width {
            return Err(Error::CorruptModel(format!(
                "support vectors have {} features, expected {width}",
                self.support_vectors.cols()
            )));
        }
        if !self.b.is_finite() || !self.support_vectors.is_finite() || self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::CorruptModel("non-finite SVM parameter".into()));
        }
        if self.labels_pm.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::CorruptModel("SVM labels must be ±1".into()));
        }
        Ok(())
    }
}

struct Smo<'a> {
    x: &'a Matrix,
    y: Vec<f64>,
    c: f64,
    tol: f64,
    gram: Matrix,
    alpha: Vec<f64>,
    b: f64,
    /// `f(x_i) − y_i`.
    errors: Vec<f64>,
}

impl Smo<'_> {
    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.y[i] * self.errors[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let (kii, kjj, kij) = (self.gram[(i, i)], self.gram[(j, j)], self.gram[(i, j)]);
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let (ei, ej) = (self.errors[i], self.errors[j]);
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < 1e-12 * (aj_new + aj + 1e-12) {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).clamp(0.0, self.c);
        let (di, dj) = (ai_new - ai, aj_new - aj);

        let b1 = self.b - ei - yi * di * kii - yj * dj * kij;
        let b2 = self.b - ej - yi * di * kij - yj * dj * kjj;
        let b_new = if ai_new > 0.0 && ai_new < self.c {
            b1
        } else if aj_new > 0.0 && aj_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = b_new - self.b;
        for k in 0..self.errors.len() {
            self.errors[k] += yi * di * self.gram[(i, k)] + yj * dj * self.gram[(j, k)] + db;
        }
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        self.b = b_new;
        true
    }

    fn model(&self, kernel: Kernel) -> SvmModel {
        let keep: Vec<usize> = (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect();
        SvmModel {
            support_vectors: self.x.select_rows(&keep),
            alphas: keep.iter().map(|&i| self.alpha[i]).collect(),
            labels_pm: keep.iter().map(|&i| self.y[i]).collect(),
            support_indices: keep,
            b: self.b,
            c: self.c,
            kernel,
        }
    }
}

/// Trains on `ds` with labels mapped `0 → −1`, `1 → +1`.
pub fn fit_svm(ds: &Dataset, cfg: &SvmConfig) -> Result<SvmModel> {
    ds.require_both_classes()?;
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C = {} must be > 0", cfg.c)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be > 0", cfg.tol)));
    }
    let kernel = cfg.kernel.resolve(ds.d())?;
    let x = ds.features();
    let n = ds.n();
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = kernel_unchecked(kernel, x.row(i), x.row(j));
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    let y: Vec<f64> = ds.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let errors = y.iter().map(|v| -v).collect();
    let mut smo = Smo {
        x,
        y,
        c: cfg.c,
        tol: cfg.tol,
        gram,
        alpha: vec![0.0; n],
        b: 0.0,
        errors,
    };

    let mut rng = rng::from_seed(cfg.seed);
    let mut quiet_passes = 0;
    let mut sweeps = 0;
    while quiet_passes < cfg.max_passes {
        if sweeps >= cfg.max_sweeps {
            return Err(Error::SvmNotConverged {
                sweeps,
                model: Box::new(smo.model(kernel)),
            });
        }
        sweeps += 1;
        let mut changed = 0;
        for i in 0..n {
            if !smo.violates_kkt(i) {
                continue;
            }
            let first = rng.gen_range(0..n - 1);
            let first = if first >= i { first + 1 } else { first };
            if smo.take_step(i, first) || (1..n).any(|off| smo.take_step(i, (first + off) % n)) {
                changed += 1;
            }
        }
        quiet_passes = if changed == 0 { quiet_passes + 1 } else { 0 };
    }
    Ok(smo.model(kernel))
}

/// `Σ αᵢ yᵢ K(xᵢ, x) + b`.
pub fn decision_function(model: &SvmModel, x: &[f64]) -> Result<f64> {
    let mut s = model.b;
    for ((sv, &a), &y) in model.support_vectors.iter_rows().zip(&model.alphas).zip(&model.labels_pm) {
        s += a * y * kernel_eval(model.kernel, sv, x)?;
    }
    Ok(s)
}

/// Class 1 iff the decision value is `>= 0`.
pub fn predict_svm(model: &SvmModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(decision_function(model, x)? >= 0.0))
}
