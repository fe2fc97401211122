//! Random forests (bagging + per-node feature subsets, majority vote) and
//! binary gradient boosting on log-loss with Newton leaf values.

use alloc::format;
use alloc::vec::Vec;

use libm::{exp, log, sqrt};
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::tree::{self, TreeConfig, TreeNode};
use crate::{rng, Error, Result};

/// Floor for the Newton denominator `Σ p(1−p)` in a boosting leaf.
pub const NEWTON_DENOMINATOR_FLOOR: f64 = 1e-12;

/// Row indices drawn uniformly with replacement.
pub fn bootstrap_indices(n: usize, rng: &mut rng::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// `n` rows drawn with replacement from `ds`.
pub fn bootstrap_sample(ds: &Dataset, seed: u64) -> Dataset {
    let idx = bootstrap_indices(ds.n(), &mut rng::from_seed(seed));
    ds.subset(&idx).expect("datasets are never empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per node; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 101,
            max_features: None,
            bootstrap: true,
            tree: TreeConfig::classification(),
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_max_features(&self, d: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| sqrt(d as f64).ceil() as usize)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        let m = self.resolved_max_features(d);
        if m == 0 || m > d {
            return Err(Error::InvalidParameter(format!(
                "max_features {m} outside 1..={d}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub config: ForestConfig,
}

/// Fits tree `index` of a forest. The tree's randomness comes only from
/// `(cfg.seed, index)`, so trees can be fitted in any order or in parallel.
pub fn fit_forest_tree(ds: &Dataset, cfg: &ForestConfig, index: usize) -> Result<TreeNode> {
    ds.require_both_classes()?;
    cfg.validate(ds.d())?;
    let mut rng = rng::from_seed(rng::derive_seed(cfg.seed, index as u64));
    let sample;
    let data = if cfg.bootstrap {
        sample = ds.subset(&bootstrap_indices(ds.n(), &mut rng))?;
        &sample
    } else {
        ds
    };
    let m = cfg.resolved_max_features(ds.d());
    let mut select = |d: usize| -> Vec<usize> {
        if m >= d {
            (0..d).collect()
        } else {
            index::sample(&mut rng, d, m).into_vec()
        }
    };
    tree::fit_tree(data, &cfg.tree, Some(&mut select))
}

pub fn fit_forest(ds: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    let trees = (0..cfg.n_trees)
        .map(|i| fit_forest_tree(ds, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        config: cfg.clone(),
    })
}

/// Majority vote over the trees' predicted classes; a tied vote goes to
/// class 0. Returns the class and the vote fractions.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<(u8, [f64; 2])> {
    if model.trees.is_empty() {
        return Err(Error::CorruptModel("forest without trees".into()));
    }
    let mut votes = [0usize; 2];
    for t in &model.trees {
        votes[usize::from(tree::predict_class(t, x)?.0)] += 1;
    }
    let n = model.trees.len() as f64;
    let class = u8::from(votes[1] > votes[0]);
    Ok((class, [votes[0] as f64 / n, votes[1] as f64 / n]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Echoed into reports; boosting here draws no random numbers.
    pub seed: u64,
}

impl Default for GbConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbModel {
    /// Positive-class rate of the training labels.
    pub prior: f64,
    /// Initial log-odds, `ln(prior / (1 − prior))`.
    pub f0: f64,
    pub learning_rate: f64,
    pub stages: Vec<TreeNode>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy of scores `f` (log-odds) against `y`.
pub fn log_loss(scores: &[f64], labels: &[u8]) -> f64 {
    // log(1 + e^{-m}) with margin m = ±f, written to avoid overflow.
    let softplus = |z: f64| if z > 0.0 { z + log(1.0 + exp(-z)) } else { log(1.0 + exp(z)) };
    scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| if y == 1 { softplus(-f) } else { softplus(f) })
        .sum::<f64>()
        / scores.len() as f64
}

/// Stagewise boosting: each stage fits a squared-error tree to the
/// residuals `y − σ(F)`, then each leaf is reset to the Newton step
/// `Σr / max(Σσ(F)(1−σ(F)), 1e−12)` over its rows, and `F += η·stage`.
pub fn fit_gb(ds: &Dataset, cfg: &GbConfig) -> Result<GbModel> {
    ds.require_both_classes()?;
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "learning rate {} must be finite and >= 0",
            cfg.learning_rate
        )));
    }
    let labels = ds.labels();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let p = y.iter().sum::<f64>() / y.len() as f64;
    let f0 = log(p / (1.0 - p));
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        ..TreeConfig::regression()
    };

    let features = ds.features();
    let rows: Vec<usize> = (0..ds.n()).collect();
    let mut scores = alloc::vec![f0; ds.n()];
    let mut stages = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        let prob: Vec<f64> = scores.iter().map(|&f| sigmoid(f)).collect();
        let residuals: Vec<f64> = y.iter().zip(&prob).map(|(y, p)| y - p).collect();
        let mut stage = tree::fit_regression_tree(features, &residuals, &tree_cfg)?;
        stage.assign_leaf_values(features, &rows, &mut |leaf_rows| {
            let num: f64 = leaf_rows.iter().map(|&i| residuals[i]).sum();
            let den: f64 = leaf_rows.iter().map(|&i| prob[i] * (1.0 - prob[i])).sum();
            num / den.max(NEWTON_DENOMINATOR_FLOOR)
        });
        for (i, s) in scores.iter_mut().enumerate() {
            *s += cfg.learning_rate * tree::predict_value(&stage, features.row(i))?;
        }
        stages.push(stage);
    }
    Ok(GbModel {
        prior: p,
        f0,
        learning_rate: cfg.learning_rate,
        stages,
    })
}

/// Log-odds after each stage: element `k` is `f0 + η·Σ_{t<k} stage_t(x)`,
/// so the result has `stages + 1` entries.
pub fn staged_scores(model: &GbModel, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(model.stages.len() + 1);
    let mut f = model.f0;
    out.push(f);
    for stage in &model.stages {
        f += model.learning_rate * tree::predict_value(stage, x)?;
        out.push(f);
    }
    Ok(out)
}

pub fn decision_score(model: &GbModel, x: &[f64]) -> Result<f64> {
    let mut f = model.f0;
    for stage in &model.stages {
        f += model.learning_rate * tree::predict_value(stage, x)?;
    }
    Ok(f)
}

/// Class (1 iff `σ(F) >= 0.5`) and positive-class probability.
///
/// A score equal to `f0` maps to the stored prior rather than `σ(f0)`,
/// which can differ from it in the last bit.
pub fn predict_gb(model: &GbModel, x: &[f64]) -> Result<(u8, f64)> {
    let f = decision_score(model, x)?;
    let p = if f == model.f0 { model.prior } else { sigmoid(f) };
    Ok((u8::from(p >= 0.5), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_of_one_row() {
        let ds = Dataset::from_rows(&[[3.0]], &[1]).unwrap();
        assert_eq!(bootstrap_sample(&ds, 4), ds);
    }

    #[test]
    fn forest_votes() {
        let leaf = |c: u8| TreeNode::Leaf {
            n_samples: 1,
            class_counts: if c == 1 { [0, 1] } else { [1, 0] },
            value: f64::from(c),
        };
        let model = |votes: &[u8]| ForestModel {
            trees: votes.iter().map(|&c| leaf(c)).collect(),
            config: ForestConfig::default(),
        };
        assert_eq!(predict_forest(&model(&[1, 0, 1]), &[0.0]).unwrap(), (1, [1.0 / 3.0, 2.0 / 3.0]));
        assert_eq!(predict_forest(&model(&[1, 1]), &[0.0]).unwrap(), (1, [0.0, 1.0]));
        assert_eq!(predict_forest(&model(&[1, 0]), &[0.0]).unwrap().0, 0);
        assert!(predict_forest(&model(&[]), &[0.0]).is_err());
    }

    #[test]
    fn forest_rejects_single_class_and_bad_config() {
        let ds = Dataset::from_rows(&[[0.0], [1.0]], &[1, 1]).unwrap();
        assert_eq!(fit_forest(&ds, &ForestConfig::default()), Err(Error::SingleClass));
        let ds = Dataset::from_rows(&[[0.0], [1.0]], &[0, 1]).unwrap();
        let cfg = ForestConfig { max_features: Some(2), ..Default::default() };
        assert!(fit_forest(&ds, &cfg).is_err());
    }

    #[test]
    fn four_point_stage_by_hand() {
        let ds = Dataset::from_rows(&[[0.0], [1.0], [2.0], [3.0]], &[0, 0, 1, 1]).unwrap();
        let cfg = GbConfig { n_estimators: 1, max_depth: 1, ..Default::default() };
        let m = fit_gb(&ds, &cfg).unwrap();
        assert_eq!(m.f0, 0.0);
        // residuals ∓0.5, hessians 0.25 each: leaf values -1/0.5 and +1/0.5
        match &m.stages[0] {
            TreeNode::Split { feature, threshold, left, right } => {
                assert_eq!((*feature, *threshold), (0, 1.5));
                assert!(matches!(**left, TreeNode::Leaf { value, .. } if value == -2.0));
                assert!(matches!(**right, TreeNode::Leaf { value, .. } if value == 2.0));
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        let expected = 1.0 / (1.0 + libm::exp(-0.2));
        let (class, p) = predict_gb(&m, &[3.0]).unwrap();
        assert_eq!(class, 1);
        assert!((p - expected).abs() < 1e-9);
        assert!((decision_score(&m, &[0.0]).unwrap() + 0.2).abs() < 1e-9);
    }

    #[test]
    fn zero_rate_or_zero_stages_is_prior() {
        let ds = Dataset::from_rows(&[[0.0], [1.0], [2.0], [3.0]], &[0, 1, 1, 1]).unwrap();
        for cfg in [
            GbConfig { n_estimators: 0, ..Default::default() },
            GbConfig { learning_rate: 0.0, n_estimators: 5, ..Default::default() },
        ] {
            let m = fit_gb(&ds, &cfg).unwrap();
            for x in [-1.0, 0.5, 9.0] {
                assert_eq!(predict_gb(&m, &[x]).unwrap().1, 0.75);
            }
        }
    }

    #[test]
    fn sigmoid_and_loss_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!(log_loss(&[800.0, -800.0], &[1, 0]) < 1e-300);
        assert!((log_loss(&[0.0], &[1]) - libm::log(2.0)).abs() < 1e-15);
    }
}
