//! SMOTE: synthetic minority rows interpolated towards k nearest
//! minority-class neighbours until both classes have the same count.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{rng, Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    /// Minority/majority ratio after resampling. Only 1.0 is supported.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Resampled data plus what happened to the neighbour count.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutcome {
    pub dataset: Dataset,
    pub synthetic_rows: usize,
    pub minority_class: u8,
    /// Neighbour count actually used.
    pub effective_k: usize,
    /// Set when `k` exceeded `minority_count - 1` and was reduced. Callers
    /// should surface this as a warning.
    pub k_clamped: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows closest to `points[query]` in Euclidean
/// distance, nearest first, excluding the query row. Equal distances go to
/// the lower row index.
pub fn knn_indices(points: &Matrix, query: usize, k: usize) -> Result<Vec<usize>> {
    let m = points.rows();
    if query >= m {
        return Err(Error::InvalidParameter(format!(
            "query row {query} out of range for {m} rows"
        )));
    }
    if k > m - 1 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} but only {} other rows",
            m - 1
        )));
    }
    let q = points.row(query);
    let mut dist: Vec<(f64, usize)> = (0..m)
        .filter(|&i| i != query)
        .map(|i| (squared_distance(q, points.row(i)), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(dist.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Oversamples the minority class to parity.
///
/// Original rows come first, unchanged and in order; synthetic rows follow.
/// Each synthetic row is `x + λ·(nb − x)` for a uniformly chosen minority
/// row `x`, one of its `k` nearest minority neighbours `nb` and
/// `λ ~ U[0, 1)`.
pub fn smote(ds: &Dataset, cfg: &SmoteConfig) -> Result<SmoteOutcome> {
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("SMOTE needs k >= 1".into()));
    }
    if cfg.target_ratio != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "SMOTE target ratio {} unsupported; only 1.0",
            cfg.target_ratio
        )));
    }
    ds.require_both_classes()?;
    let counts = ds.class_counts();
    let minority_class: u8 = if counts[1] < counts[0] { 1 } else { 0 };
    let (minority, majority) = (counts[usize::from(minority_class)], counts[usize::from(1 - minority_class)]);
    let deficit = majority - minority;
    if deficit == 0 {
        return Ok(SmoteOutcome {
            dataset: ds.clone(),
            synthetic_rows: 0,
            minority_class,
            effective_k: cfg.k,
            k_clamped: false,
        });
    }
    if minority < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: minority,
        });
    }
    let effective_k = cfg.k.min(minority - 1);

    let minority_rows: Vec<usize> = ds
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == minority_class)
        .map(|(i, _)| i)
        .collect();
    let points = ds.features().select_rows(&minority_rows);
    let neighbours = (0..points.rows())
        .map(|q| knn_indices(&points, q, effective_k))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng::from_seed(cfg.seed);
    let mut synthetic = Matrix::zeros(0, 0);
    let mut row = Vec::with_capacity(ds.d());
    for _ in 0..deficit {
        let base = rng.gen_range(0..points.rows());
        let nb = neighbours[base][rng.gen_range(0..effective_k)];
        let lambda: f64 = rng.gen();
        row.clear();
        row.extend(
            points
                .row(base)
                .iter()
                .zip(points.row(nb))
                .map(|(&x, &y)| x + lambda * (y - x)),
        );
        synthetic.push_row(&row)?;
    }

    let mut dataset = ds.clone();
    dataset.extend_rows(&synthetic, &alloc::vec![minority_class; deficit])?;
    Ok(SmoteOutcome {
        dataset,
        synthetic_rows: deficit,
        minority_class,
        effective_k,
        k_clamped: effective_k < cfg.k,
    })
}
