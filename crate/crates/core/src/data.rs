//! Tables, schema projection, mean imputation, splitting and the synthetic
//! generator.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{round, sqrt};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Matrix, Result};

/// Symptom indicators used as model inputs, in canonical column order.
pub const FEATURE_NAMES: [&str; 9] = [
    "covid_diagnosis",
    "odynophagia",
    "chills",
    "arthralgia",
    "rhinorrhea",
    "pneumonia",
    "cough",
    "dyspnea",
    "patient_type",
];

/// Binary outcome column.
pub const LABEL_NAME: &str = "mortality";

/// Ordered feature names plus the label column name.
///
/// [`FeatureSchema::default`] is the nine-symptom mortality schema. Other
/// widths are allowed so the classifiers can be exercised on small
/// problems; [`FeatureSchema::require_standard`] checks for the canonical
/// layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    feature_names: Vec<String>,
    label_name: String,
}

impl FeatureSchema {
    pub fn new(feature_names: Vec<String>, label_name: impl Into<String>) -> Result<Self> {
        let label_name = label_name.into();
        if feature_names.is_empty() {
            return Err(Error::Schema("no feature columns".to_string()));
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate feature `{name}`")));
            }
        }
        if feature_names.contains(&label_name) {
            return Err(Error::Schema(format!(
                "label `{label_name}` is also listed as a feature"
            )));
        }
        Ok(Self {
            feature_names,
            label_name,
        })
    }

    /// Placeholder names `x0..x{d-1}` and label `y`.
    pub fn generic(d: usize) -> Self {
        Self {
            feature_names: (0..d).map(|i| format!("x{i}")).collect(),
            label_name: "y".to_string(),
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn len(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_names.is_empty()
    }

    /// Errors unless this is exactly the nine-symptom mortality schema.
    pub fn require_standard(&self) -> Result<()> {
        if *self == Self::default() {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "expected the {} standard symptom columns and `{}`",
                FEATURE_NAMES.len(),
                LABEL_NAME
            )))
        }
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            label_name: LABEL_NAME.to_string(),
        }
    }
}

/// A parsed table before schema enforcement. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl RawTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::RowWidth {
                    row: i,
                    expected: header.len(),
                    found: row.len(),
                });
            }
            if let Some(column) = row.iter().position(|c| matches!(c, Some(v) if !v.is_finite())) {
                return Err(Error::NonFinite { row: i, column });
            }
        }
        Ok(Self { header, rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Blanks each cell of the named columns with probability `rate`.
    /// Used to exercise imputation on generated data.
    pub fn inject_missing(&mut self, columns: &[usize], rate: f64, seed: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidParameter(format!(
                "missing rate {rate} outside [0, 1]"
            )));
        }
        let mut rng = rng::from_seed(seed);
        for row in &mut self.rows {
            for &j in columns {
                if rng.gen::<f64>() < rate {
                    row[j] = None;
                }
            }
        }
        Ok(())
    }
}

/// Complete, binary-labelled feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    schema: FeatureSchema,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, schema: FeatureSchema) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        if features.cols() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                found: features.cols(),
            });
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / features.cols(),
                column: pos % features.cols(),
            });
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel {
                row,
                value: f64::from(labels[row]),
            });
        }
        Ok(Self {
            features,
            labels,
            schema,
        })
    }

    /// Rows and labels under a generic schema.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: &[u8]) -> Result<Self> {
        let features = Matrix::from_rows(rows)?;
        let d = features.cols();
        Self::new(features, labels.to_vec(), FeatureSchema::generic(d))
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// `[count(0), count(1)]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            [0, _] | [_, 0] => Err(Error::SingleClass),
            _ => Ok(()),
        }
    }

    /// Rows at `indices`, in order; indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
        })
    }

    /// Appends rows that share this dataset's schema.
    pub fn extend_rows(&mut self, rows: &Matrix, labels: &[u8]) -> Result<()> {
        if rows.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.rows(),
                found: labels.len(),
            });
        }
        if rows.rows() > 0 && rows.cols() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: rows.cols(),
            });
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel {
                row,
                value: f64::from(labels[row]),
            });
        }
        for r in rows.iter_rows() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: self.n(),
                    column: r.iter().position(|v| !v.is_finite()).unwrap_or(0),
                });
            }
            self.features.push_row(r)?;
        }
        self.labels.extend_from_slice(labels);
        Ok(())
    }

    /// Features followed by the label column, as a [`RawTable`].
    pub fn to_raw_table(&self) -> RawTable {
        let mut header = self.schema.feature_names.clone();
        header.push(self.schema.label_name.clone());
        let rows = self
            .features
            .iter_rows()
            .zip(&self.labels)
            .map(|(r, &l)| {
                r.iter()
                    .map(|&v| Some(v))
                    .chain(core::iter::once(Some(f64::from(l))))
                    .collect()
            })
            .collect();
        RawTable { header, rows }
    }
}

/// Train/test partition with the source row indices of each side.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Replaces every missing cell by the mean of the observed cells in its
/// column. Observed cells are untouched; fills are not rounded.
pub fn impute_mean(table: &RawTable) -> Result<RawTable> {
    let mut out = table.clone();
    for (j, name) in table.header.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut missing = false;
        for row in &table.rows {
            match row[j] {
                Some(v) => {
                    sum += v;
                    count += 1;
                }
                None => missing = true,
            }
        }
        if !missing {
            continue;
        }
        if count == 0 {
            return Err(Error::EmptyColumn(name.clone()));
        }
        let mean = sum / count as f64;
        for row in &mut out.rows {
            row[j].get_or_insert(mean);
        }
    }
    Ok(out)
}

/// Projects an imputed table onto `schema`: feature columns in schema
/// order, extra columns dropped, label column extracted. Labels must be
/// exactly 0 or 1.
pub fn select_features(table: &RawTable, schema: &FeatureSchema) -> Result<Dataset> {
    let lookup = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let columns = schema
        .feature_names()
        .iter()
        .map(|name| lookup(name))
        .collect::<Result<Vec<_>>>()?;
    let label_col = lookup(schema.label_name())?;
    if table.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut data = Vec::with_capacity(table.rows.len() * columns.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        for &j in &columns {
            let v = row[j].ok_or_else(|| Error::MissingValue {
                row: i,
                column: table.header[j].clone(),
            })?;
            data.push(v);
        }
        let label = row[label_col].ok_or_else(|| Error::MissingValue {
            row: i,
            column: schema.label_name().to_string(),
        })?;
        labels.push(if label == 0.0 {
            0
        } else if label == 1.0 {
            1
        } else {
            return Err(Error::InvalidLabel { row: i, value: label });
        });
    }
    let features = Matrix::from_vec(labels.len(), columns.len(), data)?;
    Dataset::new(features, labels, schema.clone())
}

/// Number of training rows for `ratio` of `n`, rounding half up.
pub fn train_size(n: usize, ratio: f64) -> usize {
    round(ratio * n as f64) as usize
}

fn check_split_args(ds: &Dataset, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio {ratio} outside (0, 1)"
        )));
    }
    if ds.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: ds.n(),
        });
    }
    let n_train = train_size(ds.n(), ratio);
    if n_train == 0 || n_train == ds.n() {
        return Err(Error::InvalidParameter(format!(
            "ratio {ratio} on {} rows leaves an empty partition",
            ds.n()
        )));
    }
    Ok(n_train)
}

fn split_from_order(ds: &Dataset, order: Vec<usize>, n_train: usize, seed: u64) -> Result<SplitPair> {
    let (train_rows, test_rows) = order.split_at(n_train);
    Ok(SplitPair {
        train: ds.subset(train_rows)?,
        test: ds.subset(test_rows)?,
        train_rows: train_rows.to_vec(),
        test_rows: test_rows.to_vec(),
        seed,
    })
}

/// Seeded shuffle, then the first `round(ratio·n)` rows train and the rest test.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    let n_train = check_split_args(ds, ratio)?;
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut rng::from_seed(seed));
    split_from_order(ds, order, n_train, seed)
}

/// Like [`split`], but each class is shuffled separately and contributes a
/// share of the training rows proportional to its size (largest remainder,
/// so the training size is still `round(ratio·n)`).
pub fn split_stratified(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    let n_train = check_split_args(ds, ratio)?;
    let mut rng = rng::from_seed(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[usize::from(l)].push(i);
    }
    for rows in &mut by_class {
        rows.shuffle(&mut rng);
    }
    let exact = by_class.each_ref().map(|r| r.len() as f64 * n_train as f64 / ds.n() as f64);
    let mut quota = exact.map(|q| q as usize);
    let mut left = n_train - quota[0] - quota[1];
    // Largest fractional part first; class 0 wins ties.
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - quota[a] as f64;
        let fb = exact[b] - quota[b] as f64;
        fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal)
    });
    for c in order {
        if left > 0 && quota[c] < by_class[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(ds.n() - n_train);
    for (c, rows) in by_class.iter().enumerate() {
        train.extend_from_slice(&rows[..quota[c]]);
        test.extend_from_slice(&rows[quota[c]..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    if test.is_empty() {
        return Err(Error::InvalidParameter(
            "stratified split leaves an empty test partition".to_string(),
        ));
    }
    Ok(SplitPair {
        train: ds.subset(&train)?,
        test: ds.subset(&test)?,
        train_rows: train,
        test_rows: test,
        seed,
    })
}

/// One binary feature, drawn as Bernoulli(p) with p depending on the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGenerator {
    pub name: String,
    pub p_negative: f64,
    pub p_positive: f64,
}

impl FeatureGenerator {
    /// Chooses the two conditional probabilities so the feature has
    /// marginal frequency `marginal` and Pearson (phi) correlation `corr`
    /// with a label of base rate `positive_rate`.
    pub fn from_correlation(
        name: impl Into<String>,
        corr: f64,
        marginal: f64,
        positive_rate: f64,
    ) -> Result<Self> {
        let name = name.into();
        let spread = corr * sqrt(marginal * (1.0 - marginal))
            / sqrt(positive_rate * (1.0 - positive_rate));
        let gen = Self {
            p_negative: marginal - positive_rate * spread,
            p_positive: marginal + (1.0 - positive_rate) * spread,
            name,
        };
        gen.validate()?;
        Ok(gen)
    }

    fn validate(&self) -> Result<()> {
        for p in [self.p_negative, self.p_positive] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} for `{}` outside [0, 1]",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Population correlation with the label implied by the probabilities.
    pub fn implied_correlation(&self, positive_rate: f64) -> f64 {
        let q = positive_rate * self.p_positive + (1.0 - positive_rate) * self.p_negative;
        (self.p_positive - self.p_negative) * sqrt(positive_rate * (1.0 - positive_rate))
            / sqrt(q * (1.0 - q))
    }
}

/// Label base rate plus one generator per feature column. Features are
/// conditionally independent given the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub positive_rate: f64,
    pub label_name: String,
    pub features: Vec<FeatureGenerator>,
}

impl GeneratorSpec {
    /// Nine-symptom generator with label correlations of 0.43 (covid), 0.31
    /// (odynophagia), 0.44 (chills), 0.42 (arthralgia) and 0.45
    /// (rhinorrhea). The remaining four symptoms have no reference values
    /// and are set strong enough that the classes separate well.
    pub fn mortality_default() -> Self {
        const POSITIVE_RATE: f64 = 0.3;
        let targets: [(f64, f64); 9] = [
            (0.43, 0.40),
            (0.31, 0.30),
            (0.44, 0.35),
            (0.42, 0.35),
            (0.45, 0.35),
            (0.60, 0.35),
            (0.55, 0.40),
            (0.60, 0.35),
            (0.65, 0.35),
        ];
        let features = FEATURE_NAMES
            .iter()
            .zip(targets)
            .map(|(name, (corr, marginal))| {
                FeatureGenerator::from_correlation(*name, corr, marginal, POSITIVE_RATE)
                    .expect("default generator targets are feasible")
            })
            .collect();
        Self {
            positive_rate: POSITIVE_RATE,
            label_name: LABEL_NAME.to_string(),
            features,
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::new(
            self.features.iter().map(|f| f.name.clone()).collect(),
            self.label_name.clone(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.positive_rate) {
            return Err(Error::InvalidParameter(format!(
                "positive rate {} outside [0, 1]",
                self.positive_rate
            )));
        }
        self.features.iter().try_for_each(FeatureGenerator::validate)?;
        self.schema().map(drop)
    }
}

/// Draws `n` independent rows from `spec`.
pub fn synthesize(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    spec.validate()?;
    let schema = spec.schema()?;
    let mut rng = rng::from_seed(seed);
    let d = spec.features.len();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = u8::from(rng.gen::<f64>() < spec.positive_rate);
        for f in &spec.features {
            let p = if label == 1 { f.p_positive } else { f.p_negative };
            data.push(if rng.gen::<f64>() < p { 1.0 } else { 0.0 });
        }
        labels.push(label);
    }
    Dataset::new(Matrix::from_vec(n, d, data)?, labels, schema)
}
