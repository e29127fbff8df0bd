//! Fairness statistics: base rates, group sizes and disparities, and
//! γ-subgroup-fairness checks for statistical parity (SP) and
//! false-positive (FP) notions.
//!
//! Everything is an expectation under the dataset weights and is linear in
//! the classifier, so the workhorse functions take per-row expected
//! predictions `p_i = E_{h~D}[h(X_i)]` rather than a mixture.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::labels::{LabelSpec, LabelVector, MixedClassifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    /// Statistical parity: positive-classification rates.
    Sp,
    /// False-positive rates, i.e. rates conditioned on y = 0.
    Fp,
}

impl Notion {
    pub fn name(self) -> &'static str {
        match self {
            Notion::Sp => "SP",
            Notion::Fp => "FP",
        }
    }

    /// Whether row `i` belongs to the conditioning event of this notion.
    pub(crate) fn counts(self, y: bool) -> bool {
        match self {
            Notion::Sp => true,
            Notion::Fp => !y,
        }
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Notion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Notion::Sp),
            "fp" => Ok(Notion::Fp),
            other => Err(Error::Input(format!("unknown notion `{other}`"))),
        }
    }
}

/// Direction of a fairness constraint.
///
/// `Plus` penalizes a group rate below the base rate (Φ₊ = α·(base − group) − γ),
/// `Minus` a group rate above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Rates and disparity of one group under one notion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupStats {
    /// α: Pr[g=1] (SP) or Pr[g=1, y=0] (FP).
    pub size: f64,
    /// SP(D) or FP(D).
    pub base_rate: f64,
    /// SP(D, g) or FP(D, g); equals the base rate for an empty group.
    pub group_rate: f64,
}

impl GroupStats {
    /// β = |base − group|.
    pub fn disparity(&self) -> f64 {
        (self.base_rate - self.group_rate).abs()
    }

    pub fn product(&self) -> f64 {
        self.size * self.disparity()
    }

    /// Sign whose Φ is the violated one (Plus on ties).
    pub fn sign(&self) -> Sign {
        if self.group_rate > self.base_rate {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

/// Mass of the conditioning event; errors when it is zero.
pub fn conditioning_mass(data: &Dataset, notion: Notion) -> Result<f64> {
    match notion {
        Notion::Sp => Ok(1.0),
        Notion::Fp => {
            let m = data.negative_mass();
            if m > 0.0 {
                Ok(m)
            } else {
                Err(Error::NotionUndefined("FP", "dataset has no y=0 mass".into()))
            }
        }
    }
}

/// SP(D) or FP(D) from expected predictions.
pub fn base_rate(p: &[f64], data: &Dataset, notion: Notion) -> Result<f64> {
    check_len(data.len(), p.len())?;
    let mass = conditioning_mass(data, notion)?;
    let s: f64 = data
        .labels()
        .iter()
        .zip(data.weights())
        .zip(p)
        .filter(|((&y, _), _)| notion.counts(y))
        .map(|((_, w), pi)| w * pi)
        .sum();
    Ok(s / mass)
}

/// Group statistics from expected predictions `p` and group bits `g`.
pub fn group_stats(p: &[f64], g: &[bool], data: &Dataset, notion: Notion) -> Result<GroupStats> {
    check_len(data.len(), g.len())?;
    let base = base_rate(p, data, notion)?;
    let mut size = 0.0;
    let mut hits = 0.0;
    for i in 0..data.len() {
        if g[i] && notion.counts(data.labels()[i]) {
            let w = data.weights()[i];
            size += w;
            hits += w * p[i];
        }
    }
    let group_rate = if size > 0.0 { hits / size } else { base };
    Ok(GroupStats {
        size,
        base_rate: base,
        group_rate,
    })
}

/// err(D, P) = Pr[D(X) ≠ y] from expected predictions.
pub fn error_rate(p: &[f64], data: &Dataset) -> Result<f64> {
    check_len(data.len(), p.len())?;
    Ok(data
        .labels()
        .iter()
        .zip(data.weights())
        .zip(p)
        .map(|((&y, w), pi)| if y { w * (1.0 - pi) } else { w * pi })
        .sum())
}

pub fn classifier_error(d: &MixedClassifier, data: &Dataset) -> Result<f64> {
    error_rate(&d.expected_predictions(), data)
}

/// (α_SP, β_SP) of group `g` for classifier `d`.
pub fn sp_stats(d: &MixedClassifier, g: &LabelVector, data: &Dataset) -> Result<(f64, f64)> {
    let s = group_stats(&d.expected_predictions(), g.bits(), data, Notion::Sp)?;
    Ok((s.size, s.disparity()))
}

/// (α_FP, β_FP) of group `g` for classifier `d`.
pub fn fp_stats(d: &MixedClassifier, g: &LabelVector, data: &Dataset) -> Result<(f64, f64)> {
    let s = group_stats(&d.expected_predictions(), g.bits(), data, Notion::Fp)?;
    Ok((s.size, s.disparity()))
}

/// A group witnessing unfairness, with its size α and disparity β.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub group: LabelVector,
    pub sign: Sign,
    pub notion: Notion,
    pub size: f64,
    pub disparity: f64,
    pub product: f64,
}

impl Certificate {
    pub fn from_stats(group: LabelVector, stats: &GroupStats, notion: Notion) -> Self {
        Self {
            group,
            sign: stats.sign(),
            notion,
            size: stats.size,
            disparity: stats.disparity(),
            product: stats.product(),
        }
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            notion: self.notion,
            sign: self.sign,
            alpha: self.size,
            beta: self.disparity,
            product: self.product,
            group: self.group.to_spec(),
        }
    }
}

/// Wire form of a [`Certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub notion: Notion,
    pub sign: Sign,
    pub alpha: f64,
    pub beta: f64,
    pub product: f64,
    pub group: LabelSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Fair,
    Unfair(Certificate),
}

impl Verdict {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Fair => None,
            Verdict::Unfair(c) => Some(c),
        }
    }

    pub fn is_fair(&self) -> bool {
        matches!(self, Verdict::Fair)
    }
}

/// Checks γ-fairness of `d` over an enumerated group family.
///
/// Returns the certificate maximizing α·β when that maximum exceeds γ,
/// earliest group first on ties.
pub fn check_gamma_fair(
    d: &MixedClassifier,
    groups: &[LabelVector],
    gamma: f64,
    data: &Dataset,
    notion: Notion,
) -> Result<Verdict> {
    if groups.is_empty() {
        return Err(Error::Input("empty group family".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Input(format!("gamma {gamma} outside [0, 1]")));
    }
    let p = d.expected_predictions();
    let mut best: Option<(usize, GroupStats)> = None;
    for (j, g) in groups.iter().enumerate() {
        let s = group_stats(&p, g.bits(), data, notion)?;
        if best.as_ref().is_none_or(|(_, b)| s.product() > b.product()) {
            best = Some((j, s));
        }
    }
    let (j, s) = best.expect("non-empty family");
    Ok(if s.product() > gamma {
        Verdict::Unfair(Certificate::from_stats(groups[j].clone(), &s, notion))
    } else {
        Verdict::Fair
    })
}
