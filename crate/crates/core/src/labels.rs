//! Labellings of a fixed dataset and finite mixtures over them.
//!
//! A [`LabelVector`] is one element of H(S) or G(S): the n bits a hypothesis
//! (or group indicator) induces on the dataset, together with the parameters
//! that generated them. Regenerating the bits from the stored parameters must
//! reproduce them exactly, so every parametric evaluation goes through
//! [`Provenance::evaluate`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One thresholded-feature literal: true iff `(x[column] > threshold) == positive`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Literal {
    pub column: usize,
    pub threshold: f64,
    pub positive: bool,
}

impl Literal {
    pub fn holds(&self, value: f64) -> bool {
        (value > self.threshold) == self.positive
    }
}

/// How a labelling was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Bits supplied directly (predictions file, enumerated family member).
    Explicit,
    Constant {
        value: bool,
    },
    /// `1 iff Σ_j weights[j]·x[columns[j]] − threshold > 0`, flipped when `negated`.
    Linear {
        columns: Vec<usize>,
        weights: Vec<f64>,
        threshold: f64,
        #[serde(default)]
        negated: bool,
    },
    /// Conjunction of literals (empty conjunction is all-ones), flipped when `negated`.
    Conjunction {
        literals: Vec<Literal>,
        #[serde(default)]
        negated: bool,
    },
}

impl Provenance {
    /// Recomputes the bits on `features`; `None` for explicit labellings.
    pub fn evaluate(&self, features: &DMatrix<f64>) -> Option<Vec<bool>> {
        let n = features.nrows();
        match self {
            Provenance::Explicit => None,
            Provenance::Constant { value } => Some(vec![*value; n]),
            Provenance::Linear {
                columns,
                weights,
                threshold,
                negated,
            } => Some(
                (0..n)
                    .map(|i| {
                        let score: f64 = columns.iter().zip(weights).map(|(&c, &w)| w * features[(i, c)]).sum();
                        (score - threshold > 0.0) != *negated
                    })
                    .collect(),
            ),
            Provenance::Conjunction { literals, negated } => Some(
                (0..n)
                    .map(|i| literals.iter().all(|l| l.holds(features[(i, l.column)])) != *negated)
                    .collect(),
            ),
        }
    }

    fn max_column(&self) -> Option<usize> {
        match self {
            Provenance::Linear { columns, .. } => columns.iter().copied().max(),
            Provenance::Conjunction { literals, .. } => literals.iter().map(|l| l.column).max(),
            _ => None,
        }
    }

    fn negate(&self) -> Provenance {
        match self.clone() {
            Provenance::Explicit => Provenance::Explicit,
            Provenance::Constant { value } => Provenance::Constant { value: !value },
            Provenance::Linear {
                columns,
                weights,
                threshold,
                negated,
            } => Provenance::Linear {
                columns,
                weights,
                threshold,
                negated: !negated,
            },
            Provenance::Conjunction { literals, negated } => Provenance::Conjunction {
                literals,
                negated: !negated,
            },
        }
    }
}

/// n binary labels on a dataset plus the parameters that generated them.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVector {
    bits: Vec<bool>,
    provenance: Provenance,
}

impl LabelVector {
    pub fn explicit(bits: Vec<bool>) -> Self {
        Self {
            bits,
            provenance: Provenance::Explicit,
        }
    }

    pub fn constant(n: usize, value: bool) -> Self {
        Self {
            bits: vec![value; n],
            provenance: Provenance::Constant { value },
        }
    }

    /// Builds the labelling by evaluating `provenance` on `features`.
    pub fn generate(provenance: Provenance, features: &DMatrix<f64>) -> Result<Self> {
        if let Some(c) = provenance.max_column() {
            if c >= features.ncols() {
                return Err(Error::Input(format!(
                    "labelling references column {c} but only {} exist",
                    features.ncols()
                )));
            }
        }
        let bits = provenance
            .evaluate(features)
            .ok_or_else(|| Error::Input("explicit labelling carries no parameters".into()))?;
        Ok(Self { bits, provenance })
    }

    pub fn from_bits_u8(bits: &[u8]) -> Self {
        Self::explicit(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
            provenance: self.provenance.negate(),
        }
    }

    /// True when the stored parameters regenerate exactly these bits.
    pub fn regenerates(&self, features: &DMatrix<f64>) -> bool {
        match self.provenance.evaluate(features) {
            None => true,
            Some(bits) => bits == self.bits,
        }
    }

    pub fn to_spec(&self) -> LabelSpec {
        let bits = matches!(self.provenance, Provenance::Explicit)
            .then(|| self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect());
        LabelSpec {
            provenance: self.provenance.clone(),
            bits,
        }
    }

    pub fn from_spec(spec: &LabelSpec, features: &DMatrix<f64>) -> Result<Self> {
        match &spec.provenance {
            Provenance::Explicit => {
                let raw = spec
                    .bits
                    .as_deref()
                    .ok_or_else(|| Error::Input("explicit labelling without bits".into()))?;
                let bits = raw
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Input(format!("invalid bit character {other:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if bits.len() != features.nrows() {
                    return Err(Error::Dimension {
                        expected: features.nrows(),
                        actual: bits.len(),
                    });
                }
                Ok(Self::explicit(bits))
            }
            other => Self::generate(other.clone(), features),
        }
    }
}

/// Serialized form of a [`LabelVector`]: parameters, plus bits only when explicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    #[serde(flatten)]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<String>,
}

/// A finitely supported distribution over labellings.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedClassifier {
    support: Vec<LabelVector>,
    probs: Vec<f64>,
}

impl MixedClassifier {
    pub fn new(support: Vec<LabelVector>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Input("mixed classifier needs a non-empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::Dimension {
                expected: support.len(),
                actual: probs.len(),
            });
        }
        let n = support[0].len();
        if let Some(bad) = support.iter().find(|h| h.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                actual: bad.len(),
            });
        }
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::Input(
                "mixture probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("mixture probabilities sum to {total}, not 1")));
        }
        Ok(Self { support, probs })
    }

    pub fn point(h: LabelVector) -> Self {
        Self {
            support: vec![h],
            probs: vec![1.0],
        }
    }

    /// Uniform over `support`, merging identical labellings.
    pub fn uniform(support: Vec<LabelVector>) -> Result<Self> {
        let k = support.len();
        Self::from_counts(support.into_iter().map(|h| (h, 1)).collect(), k)
    }

    /// Empirical distribution from (labelling, count) pairs; duplicates merged.
    pub(crate) fn from_counts(items: Vec<(LabelVector, usize)>, total: usize) -> Result<Self> {
        let mut index: std::collections::HashMap<Vec<bool>, usize> = Default::default();
        let mut support: Vec<LabelVector> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for (h, c) in items {
            match index.get(h.bits()) {
                Some(&j) => counts[j] += c,
                None => {
                    index.insert(h.bits().to_vec(), support.len());
                    support.push(h);
                    counts.push(c);
                }
            }
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[LabelVector] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `p_i = E_{h~D}[h(X_i)]` for every row.
    pub fn expected_predictions(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.len()];
        for (h, &q) in self.support.iter().zip(&self.probs) {
            for (pi, &b) in p.iter_mut().zip(h.bits()) {
                if b {
                    *pi += q;
                }
            }
        }
        p
    }

    pub fn complement(&self) -> Self {
        Self {
            support: self.support.iter().map(LabelVector::complement).collect(),
            probs: self.probs.clone(),
        }
    }
}

impl From<LabelVector> for MixedClassifier {
    fn from(h: LabelVector) -> Self {
        Self::point(h)
    }
}
