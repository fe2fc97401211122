//! Recursive-partitioning trees: entropy/information-gain classification
//! trees and the squared-error regression trees used by boosting.
//!
//! Split thresholds sit at midpoints between consecutive distinct values of
//! a feature. A row goes left when `x[feature] <= threshold`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use libm::log2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Matrix, Result};

/// Two gains closer than this are treated as equal, and a split must beat
/// `min_gain` by more than this to be taken.
pub const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Entropy,
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_gain: f64,
    pub criterion: Criterion,
}

impl TreeConfig {
    pub fn classification() -> Self {
        Self {
            max_depth: 6,
            min_samples_split: 2,
            min_gain: 0.0,
            criterion: Criterion::Entropy,
        }
    }

    pub fn regression() -> Self {
        Self {
            max_depth: 3,
            criterion: Criterion::SquaredError,
            ..Self::classification()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be >= 2".into()));
        }
        if !self.min_gain.is_finite() {
            return Err(Error::InvalidParameter("min_gain must be finite".into()));
        }
        Ok(())
    }
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self::classification()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// `class_counts` is `[0, 0]` in regression trees. `value` is the
    /// positive-class fraction for classification leaves and the fitted
    /// output for regression leaves.
    Leaf {
        n_samples: usize,
        class_counts: [usize; 2],
        value: f64,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Checks every split references a feature below `width` with a finite
    /// threshold and every leaf value is finite.
    pub fn validate(&self, width: usize) -> Result<()> {
        match self {
            TreeNode::Leaf { value, .. } if !value.is_finite() => {
                Err(Error::CorruptModel("non-finite leaf value".into()))
            }
            TreeNode::Leaf { .. } => Ok(()),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= width {
                    return Err(Error::CorruptModel(format!(
                        "split on feature {feature} but inputs have {width}"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::CorruptModel("non-finite threshold".into()));
                }
                left.validate(width)?;
                right.validate(width)
            }
        }
    }

    fn leaf_for(&self, x: &[f64]) -> Result<&TreeNode> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { .. } => return Ok(node),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = x.get(*feature).ok_or_else(|| {
                        Error::CorruptModel(format!(
                            "split on feature {feature} but input has {}",
                            x.len()
                        ))
                    })?;
                    node = if *v <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Overwrites every leaf value with `f(rows reaching that leaf)`.
    pub(crate) fn assign_leaf_values(
        &mut self,
        features: &Matrix,
        rows: &[usize],
        f: &mut dyn FnMut(&[usize]) -> f64,
    ) {
        match self {
            TreeNode::Leaf { value, .. } => *value = f(rows),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| features[(i, *feature)] <= *threshold);
                left.assign_leaf_values(features, &l, f);
                right.assign_leaf_values(features, &r, f);
            }
        }
    }
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn entropy(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(entropy_unchecked(class_counts, total))
}

fn entropy_unchecked(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * log2(p)
        })
        .sum()
}

/// `H(parent) − (n_L/n)·H(left) − (n_R/n)·H(right)`. Empty children
/// contribute nothing.
pub fn information_gain(parent: &[usize], left: &[usize], right: &[usize]) -> Result<f64> {
    if left.len() != parent.len()
        || right.len() != parent.len()
        || parent.iter().zip(left).zip(right).any(|((p, l), r)| l + r != *p)
    {
        return Err(Error::InconsistentCounts);
    }
    let n: usize = parent.iter().sum();
    let h = entropy(parent)?;
    Ok(h - weighted_entropy(left, n) - weighted_entropy(right, n))
}

fn weighted_entropy(counts: &[usize], parent_total: usize) -> f64 {
    let t: usize = counts.iter().sum();
    if t == 0 {
        0.0
    } else {
        t as f64 / parent_total as f64 * entropy_unchecked(counts, t)
    }
}

/// What a tree is fitted against.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Binary class labels, scored by information gain.
    Classes(&'a [u8]),
    /// Real targets, scored by variance reduction.
    Values(&'a [f64]),
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Classes(c) => c.len(),
            Target::Values(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    // Adjacent floats: the midpoint may round up to `b`, which would send
    // `b` left as well.
    if m >= b {
        a
    } else {
        m
    }
}

/// Best split over all candidate features and midpoint thresholds, or
/// `None` when nothing beats `min_gain`. Ties go to the lowest feature
/// index, then the lowest threshold.
pub fn best_split(
    features: &Matrix,
    target: Target<'_>,
    candidate_features: &[usize],
    min_gain: f64,
) -> Option<Split> {
    if target.len() != features.rows() {
        return None;
    }
    let rows: Vec<usize> = (0..features.rows()).collect();
    best_split_rows(features, &rows, target, candidate_features, min_gain)
}

fn best_split_rows(
    features: &Matrix,
    rows: &[usize],
    target: Target<'_>,
    candidate_features: &[usize],
    min_gain: f64,
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let mut candidates = candidate_features.to_vec();
    candidates.sort_unstable();
    candidates.dedup();

    let mut best: Option<Split> = None;
    let mut sorted = rows.to_vec();
    for &f in candidates.iter().filter(|&&f| f < features.cols()) {
        sorted.sort_by(|&a, &b| features[(a, f)].total_cmp(&features[(b, f)]));
        let mut consider = |threshold: f64, gain: f64| {
            let beats = match best {
                None => gain > min_gain + GAIN_TOLERANCE,
                Some(b) => gain > b.gain + GAIN_TOLERANCE,
            };
            if beats {
                best = Some(Split {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        };
        match target {
            Target::Classes(labels) => {
                let mut parent = [0usize; 2];
                for &i in &sorted {
                    parent[usize::from(labels[i])] += 1;
                }
                let n = sorted.len();
                let h = entropy_unchecked(&parent, n);
                let mut left = [0usize; 2];
                for k in 0..n - 1 {
                    left[usize::from(labels[sorted[k]])] += 1;
                    let (a, b) = (features[(sorted[k], f)], features[(sorted[k + 1], f)]);
                    if a < b {
                        let right = [parent[0] - left[0], parent[1] - left[1]];
                        let gain = h - weighted_entropy(&left, n) - weighted_entropy(&right, n);
                        consider(midpoint(a, b), gain);
                    }
                }
            }
            Target::Values(values) => {
                let n = sorted.len() as f64;
                let total: f64 = sorted.iter().map(|&i| values[i]).sum();
                let base = total * total / n;
                let mut left_sum = 0.0;
                for k in 0..sorted.len() - 1 {
                    left_sum += values[sorted[k]];
                    let (a, b) = (features[(sorted[k], f)], features[(sorted[k + 1], f)]);
                    if a < b {
                        let nl = (k + 1) as f64;
                        let nr = n - nl;
                        let right_sum = total - left_sum;
                        let gain = (left_sum * left_sum / nl + right_sum * right_sum / nr - base) / n;
                        consider(midpoint(a, b), gain);
                    }
                }
            }
        }
    }
    best
}

/// Picks the candidate features examined at one node, given the feature count.
pub type FeatureSelector<'a> = &'a mut dyn FnMut(usize) -> Vec<usize>;

struct Grower<'a, 'b> {
    features: &'a Matrix,
    target: Target<'a>,
    cfg: &'a TreeConfig,
    selector: Option<FeatureSelector<'b>>,
}

impl Grower<'_, '_> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        match self.target {
            Target::Classes(labels) => {
                let mut counts = [0usize; 2];
                for &i in rows {
                    counts[usize::from(labels[i])] += 1;
                }
                TreeNode::Leaf {
                    n_samples: rows.len(),
                    class_counts: counts,
                    value: counts[1] as f64 / rows.len() as f64,
                }
            }
            Target::Values(values) => TreeNode::Leaf {
                n_samples: rows.len(),
                class_counts: [0, 0],
                value: rows.iter().map(|&i| values[i]).sum::<f64>() / rows.len() as f64,
            },
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.target {
            Target::Classes(labels) => rows.iter().all(|&i| labels[i] == labels[rows[0]]),
            Target::Values(values) => rows.iter().all(|&i| values[i] == values[rows[0]]),
        }
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> TreeNode {
        if depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split || self.is_pure(rows) {
            return self.leaf(rows);
        }
        let d = self.features.cols();
        let candidates: Vec<usize> = match self.selector.as_mut() {
            Some(select) => select(d),
            None => (0..d).collect(),
        };
        let Some(split) = best_split_rows(self.features, rows, self.target, &candidates, self.cfg.min_gain)
        else {
            return self.leaf(rows);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.features[(i, split.feature)] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

/// Grows an entropy classification tree. `selector`, when given, chooses
/// the candidate features at every node (random forests use this).
pub fn fit_tree(ds: &Dataset, cfg: &TreeConfig, selector: Option<FeatureSelector<'_>>) -> Result<TreeNode> {
    cfg.validate()?;
    if cfg.criterion != Criterion::Entropy {
        return Err(Error::InvalidParameter(
            "classification trees use the entropy criterion".into(),
        ));
    }
    let rows: Vec<usize> = (0..ds.n()).collect();
    let mut grower = Grower {
        features: ds.features(),
        target: Target::Classes(ds.labels()),
        cfg,
        selector,
    };
    Ok(grower.grow(&rows, 0))
}

/// Grows a squared-error regression tree; leaves hold target means.
pub fn fit_regression_tree(features: &Matrix, targets: &[f64], cfg: &TreeConfig) -> Result<TreeNode> {
    cfg.validate()?;
    if cfg.criterion != Criterion::SquaredError {
        return Err(Error::InvalidParameter(
            "regression trees use the squared_error criterion".into(),
        ));
    }
    if features.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if targets.len() != features.rows() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            found: targets.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite regression target".into()));
    }
    let rows: Vec<usize> = (0..features.rows()).collect();
    let mut grower = Grower {
        features,
        target: Target::Values(targets),
        cfg,
        selector: None,
    };
    Ok(grower.grow(&rows, 0))
}

/// Majority class (ties → 0) and the leaf's class frequencies.
pub fn predict_class(node: &TreeNode, x: &[f64]) -> Result<(u8, [f64; 2])> {
    match node.leaf_for(x)? {
        TreeNode::Leaf {
            class_counts,
            n_samples,
            ..
        } => {
            let total = class_counts[0] + class_counts[1];
            if total == 0 || total != *n_samples {
                return Err(Error::CorruptModel("leaf without class counts".into()));
            }
            let class = u8::from(class_counts[1] > class_counts[0]);
            let p1 = class_counts[1] as f64 / total as f64;
            Ok((class, [1.0 - p1, p1]))
        }
        TreeNode::Split { .. } => unreachable!("leaf_for stops at leaves"),
    }
}

/// Output of a regression tree.
pub fn predict_value(node: &TreeNode, x: &[f64]) -> Result<f64> {
    match node.leaf_for(x)? {
        TreeNode::Leaf { value, .. } => Ok(*value),
        TreeNode::Split { .. } => unreachable!("leaf_for stops at leaves"),
    }
}
