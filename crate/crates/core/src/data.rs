//! Dataset ingestion and the toy datasets used throughout the tests.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelVector;

const MISSING_TOKENS: [&str; 4] = ["", "?", "NA", "NaN"];

/// Column roles for a CSV file, normally read from a JSON config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub protected: Vec<String>,
    pub label: String,
    /// Binarize the label at this nearest-rank percentile, in (0, 100).
    #[serde(default)]
    pub percentile: Option<f64>,
    #[serde(default)]
    pub weight: Option<String>,
    /// Columns dropped before anything else (identifiers, free text).
    #[serde(default)]
    pub ignore: Vec<String>,
    /// Drop rows with missing cells instead of failing.
    #[serde(default)]
    pub drop_missing: bool,
    /// Replace missing feature cells with this value. Missing labels and
    /// weights are never filled.
    #[serde(default)]
    pub fill_missing: Option<f64>,
}

impl DatasetSchema {
    pub fn new(protected: &[&str], label: &str) -> Self {
        Self {
            protected: protected.iter().map(|s| s.to_string()).collect(),
            label: label.to_string(),
            percentile: None,
            weight: None,
            ignore: Vec::new(),
            drop_missing: false,
            fill_missing: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.protected.is_empty() {
            return Err(Error::Schema("protected column list is empty".into()));
        }
        if self.protected.contains(&self.label) {
            return Err(Error::Schema(format!(
                "label column `{}` is listed as protected",
                self.label
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.protected.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Schema(format!("protected column `{dup}` listed twice")));
        }
        if let Some(w) = &self.weight {
            if w == &self.label || self.protected.contains(w) {
                return Err(Error::Schema(format!(
                    "weight column `{w}` doubles as label or protected column"
                )));
            }
        }
        if let Some(clash) = self
            .ignore
            .iter()
            .find(|c| **c == self.label || self.protected.contains(c) || Some(*c) == self.weight.as_ref())
        {
            return Err(Error::Schema(format!("ignored column `{clash}` is also in use")));
        }
        if self.fill_missing.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Schema("fill_missing must be finite".into()));
        }
        if let Some(q) = self.percentile {
            if !(q > 0.0 && q < 100.0) {
                return Err(Error::Schema(format!("percentile {q} outside (0, 100)")));
            }
        }
        Ok(())
    }
}

/// n weighted rows with features X = (x, x') and binary labels y.
///
/// The feature matrix holds every feature column; `protected` lists the
/// columns forming x, and the remaining columns form x'.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    feature_names: Vec<String>,
    protected: Vec<usize>,
    labels: Vec<bool>,
    weights: Vec<f64>,
    label_name: String,
}

impl Dataset {
    /// Builds a dataset; `weights = None` means uniform.
    ///
    /// Supplied weights are rescaled to sum to one unless they already do
    /// to within 1e-12, in which case they are kept bit-for-bit.
    pub fn new(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        protected: Vec<usize>,
        labels: Vec<bool>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Input("dataset has no rows".into()));
        }
        if features.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: features.nrows(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Dimension {
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        if protected.is_empty() {
            return Err(Error::Schema("no protected columns".into()));
        }
        let mut seen = HashSet::new();
        for &c in &protected {
            if c >= features.ncols() || !seen.insert(c) {
                return Err(Error::Schema(format!("invalid protected column index {c}")));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("feature values must be finite".into()));
        }
        let weights = match weights {
            None => vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        actual: w.len(),
                    });
                }
                if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                    return Err(Error::Input("weights must be finite and nonnegative".into()));
                }
                let total: f64 = w.iter().sum();
                if total.is_nan() || total <= 0.0 {
                    return Err(Error::Input("weights sum to zero".into()));
                }
                if (total - 1.0).abs() <= 1e-12 {
                    w
                } else {
                    w.iter().map(|v| v / total).collect()
                }
            }
        };
        Ok(Self {
            features,
            feature_names,
            protected,
            labels,
            weights,
            label_name: "y".into(),
        })
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn protected_columns(&self) -> &[usize] {
        &self.protected
    }

    pub fn unprotected_columns(&self) -> Vec<usize> {
        (0..self.features.ncols())
            .filter(|c| !self.protected.contains(c))
            .collect()
    }

    pub fn all_columns(&self) -> Vec<usize> {
        (0..self.features.ncols()).collect()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Pr[y = 1] under the empirical distribution.
    pub fn positive_mass(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.weights)
            .filter(|(&y, _)| y)
            .map(|(_, w)| w)
            .sum()
    }

    /// Pr[y = 0].
    pub fn negative_mass(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.weights)
            .filter(|(&y, _)| !y)
            .map(|(_, w)| w)
            .sum()
    }

    /// Copy with every weight replaced; used for restricted instances.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        let mut d = Self::new(
            self.features.clone(),
            self.feature_names.clone(),
            self.protected.clone(),
            self.labels.clone(),
            Some(weights),
        )?;
        d.label_name = self.label_name.clone();
        Ok(d)
    }

    /// Writes header + rows; values use 17 significant digits so they reload exactly.
    pub fn write_csv<W: Write>(&self, out: W, weight_column: Option<&str>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        if let Some(name) = weight_column {
            header.push(name);
        }
        w.write_record(&header).map_err(csv_io)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = (0..self.features.ncols())
                .map(|c| format!("{:.16e}", self.features[(i, c)]))
                .collect();
            row.push(if self.labels[i] { "1".into() } else { "0".into() });
            if weight_column.is_some() {
                row.push(format!("{:.16e}", self.weights[i]));
            }
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Schema that reloads a file produced by [`Dataset::write_csv`].
    pub fn schema(&self, weight_column: Option<&str>) -> DatasetSchema {
        DatasetSchema {
            protected: self.protected.iter().map(|&c| self.feature_names[c].clone()).collect(),
            label: self.label_name.clone(),
            percentile: None,
            weight: weight_column.map(str::to_string),
            ignore: Vec::new(),
            drop_missing: false,
            fill_missing: None,
        }
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Loads a CSV file according to `schema`.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

/// Parses CSV text (header row, comma separated) according to `schema`.
pub fn read_csv<R: Read>(input: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Input("empty file".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Schema(format!("duplicate column `{dup}`")));
    }
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let label_idx = find(&schema.label)?;
    let weight_idx = schema.weight.as_deref().map(find).transpose()?;
    for name in schema.protected.iter().chain(&schema.ignore) {
        find(name)?;
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_idx && Some(c) != weight_idx && !schema.ignore.contains(&header[c]))
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&c| header[c].clone()).collect();
    let protected: Vec<usize> = schema
        .protected
        .iter()
        .map(|p| feature_names.iter().position(|f| f == p).unwrap())
        .collect();

    let mut values: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut dropped = 0usize;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |c: usize| -> Result<Option<f64>> {
            let text = record.get(c).unwrap_or("").trim();
            if MISSING_TOKENS.contains(&text) {
                return Ok(None);
            }
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(Error::Parse {
                    row,
                    column: header[c].clone(),
                    message: format!("`{text}` is not a finite number"),
                }),
            }
        };
        let used = feature_idx
            .iter()
            .copied()
            .chain(std::iter::once(label_idx))
            .chain(weight_idx);
        let mut parsed = Vec::with_capacity(header.len());
        let mut missing: Option<usize> = None;
        for (j, c) in used.enumerate() {
            match (cell(c)?, schema.fill_missing) {
                (Some(v), _) => parsed.push(v),
                (None, Some(fill)) if j < feature_idx.len() => parsed.push(fill),
                (None, _) => {
                    missing = Some(c);
                    break;
                }
            }
        }
        if let Some(c) = missing {
            if schema.drop_missing {
                dropped += 1;
                continue;
            }
            return Err(Error::Parse {
                row,
                column: header[c].clone(),
                message: "missing value".into(),
            });
        }
        let k = feature_idx.len();
        values.extend_from_slice(&parsed[..k]);
        raw_labels.push(parsed[k]);
        if weight_idx.is_some() {
            weights.push(parsed[k + 1]);
        }
    }
    if dropped > 0 {
        log::info!(
            "dropped {dropped} rows with missing values; {} remain",
            raw_labels.len()
        );
    }
    if raw_labels.is_empty() {
        return Err(Error::Input("file has no data rows".into()));
    }
    let labels = match schema.percentile {
        Some(q) => binarize_percentile(&raw_labels, q),
        None => raw_labels
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 0.0 {
                    Ok(false)
                } else if v == 1.0 {
                    Ok(true)
                } else {
                    Err(Error::Parse {
                        row: i + 1,
                        column: schema.label.clone(),
                        message: format!("label {v} is not 0/1 and no percentile was given"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let features = DMatrix::from_row_slice(labels.len(), feature_names.len(), &values);
    let weights = weight_idx.map(|_| weights);
    Ok(Dataset::new(features, feature_names, protected, labels, weights)?.with_label_name(schema.label.clone()))
}

/// Nearest-rank percentile: the ceil(q·n/100)-th smallest value.
pub fn nearest_rank_percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64) / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Labels each value 1 iff it is at least the q-th nearest-rank percentile.
pub fn binarize_percentile(values: &[f64], q: f64) -> Vec<bool> {
    let threshold = nearest_rank_percentile(values, q);
    values.iter().map(|&v| v >= threshold).collect()
}

/// Eight rows over (race, gender) where every marginal looks fair but two
/// intersections do not.
///
/// Each of the four attribute combinations appears twice, once with y=0 and
/// once with y=1. The returned decisions are 1 iff race == gender.
pub fn make_example1() -> (Dataset, LabelVector) {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut decisions = Vec::new();
    for race in [0.0, 1.0] {
        for gender in [0.0, 1.0] {
            for y in [false, true] {
                values.extend_from_slice(&[race, gender]);
                labels.push(y);
                decisions.push(race == gender);
            }
        }
    }
    let data = Dataset::new(
        DMatrix::from_row_slice(8, 2, &values),
        vec!["race".into(), "gender".into()],
        vec![0, 1],
        labels,
        None,
    )
    .expect("static toy dataset");
    (data, LabelVector::explicit(decisions))
}

/// Four uniform rows with y = [0,0,0,1]; returns (data, g, h) with
/// g = [1,1,0,0] over the protected column and h = [1,0,1,0].
pub fn make_d4() -> (Dataset, LabelVector, LabelVector) {
    let data = Dataset::new(
        DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        vec!["a".into(), "b".into()],
        vec![0],
        vec![false, false, false, true],
        None,
    )
    .expect("static toy dataset");
    (
        data,
        LabelVector::from_bits_u8(&[1, 1, 0, 0]),
        LabelVector::from_bits_u8(&[1, 0, 1, 0]),
    )
}
