//! Pearson correlation and the labelled feature/label correlation matrix.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::sqrt;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Matrix, Result};

/// Square correlation matrix over named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[(i, j)])
    }
}

/// Centered sum of squares, or `None` when the column is constant.
fn centered(x: &[f64]) -> (Vec<f64>, Option<f64>) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss: f64 = c.iter().map(|v| v * v).sum();
    (c, (ss > 0.0).then_some(ss))
}

fn correlate_centered(cx: &[f64], ssx: f64, cy: &[f64], ssy: f64) -> f64 {
    let sxy: f64 = cx.iter().zip(cy).map(|(a, b)| a * b).sum();
    (sxy / sqrt(ssx * ssy)).clamp(-1.0, 1.0)
}

/// Product-moment correlation, computed from mean-centred columns.
///
/// A constant input is an error (`ZeroVariance("x")` or `("y")`), not NaN.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: x.len(),
        });
    }
    let (cx, ssx) = centered(x);
    let (cy, ssy) = centered(y);
    let ssx = ssx.ok_or_else(|| Error::ZeroVariance("x".to_string()))?;
    let ssy = ssy.ok_or_else(|| Error::ZeroVariance("y".to_string()))?;
    Ok(correlate_centered(&cx, ssx, &cy, ssy))
}

/// Correlations among all feature columns and the label (last row/column).
pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix> {
    if ds.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: ds.n(),
        });
    }
    let mut labels: Vec<String> = ds.schema().feature_names().to_vec();
    labels.push(ds.schema().label_name().to_string());
    let mut columns: Vec<Vec<f64>> = (0..ds.d()).map(|j| ds.features().column(j)).collect();
    columns.push(ds.labels().iter().map(|&l| f64::from(l)).collect());

    let centred = columns
        .iter()
        .zip(&labels)
        .map(|(col, name)| {
            let (c, ss) = centered(col);
            ss.map(|ss| (c, ss))
                .ok_or_else(|| Error::ZeroVariance(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = labels.len();
    let mut values = Matrix::zeros(k, k);
    for i in 0..k {
        values[(i, i)] = 1.0;
        for j in i + 1..k {
            let r = correlate_centered(&centred[i].0, centred[i].1, &centred[j].0, centred[j].1);
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix { labels, values })
}
