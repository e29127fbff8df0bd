//! Serialized models and prediction files.

use std::io::Read;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{DualEntryJson, DualVector};
use crate::labels::{LabelSpec, LabelVector, MixedClassifier};
use crate::metrics::Notion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub prob: f64,
    pub hypothesis: LabelSpec,
}

/// A trained randomized classifier and its dual certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub notion: Notion,
    pub gamma: f64,
    pub cap: f64,
    pub support: Vec<SupportEntry>,
    pub dual: Vec<DualEntryJson>,
}

impl Model {
    pub fn new(classifier: &MixedClassifier, dual: &DualVector, notion: Notion, gamma: f64) -> Self {
        Self {
            notion,
            gamma,
            cap: dual.bound(),
            support: classifier
                .support()
                .iter()
                .zip(classifier.probs())
                .map(|(h, &prob)| SupportEntry {
                    prob,
                    hypothesis: h.to_spec(),
                })
                .collect(),
            dual: dual.to_json(),
        }
    }

    /// Parses and checks the shape of a model; hypotheses are not evaluated.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.support.is_empty() {
            return Err(Error::Input("model has an empty support".into()));
        }
        if !(0.0..=1.0).contains(&model.gamma) || !(model.cap.is_finite() && model.cap > 0.0) {
            return Err(Error::Input("model has invalid gamma or cap".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rebuilds the classifier on `features`.
    pub fn classifier(&self, features: &DMatrix<f64>) -> Result<MixedClassifier> {
        let support = self
            .support
            .iter()
            .map(|e| LabelVector::from_spec(&e.hypothesis, features))
            .collect::<Result<Vec<_>>>()?;
        MixedClassifier::new(support, self.support.iter().map(|e| e.prob).collect())
    }

    pub fn dual(&self, features: &DMatrix<f64>) -> Result<DualVector> {
        DualVector::from_json(&self.dual, self.cap, features)
    }
}

/// Reads 0/1 decisions from the column named `D` of a headed CSV.
pub fn read_predictions<R: Read>(input: R) -> Result<LabelVector> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "D")
        .ok_or_else(|| Error::Schema("predictions file has no column `D`".into()))?;
    let mut bits = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: row + 1,
            column: "D".into(),
            message: e.to_string(),
        })?;
        bits.push(match record.get(col) {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(Error::Parse {
                    row: row + 1,
                    column: "D".into(),
                    message: format!("expected 0 or 1, got {:?}", other.unwrap_or("")),
                })
            }
        });
    }
    if bits.is_empty() {
        return Err(Error::Input("predictions file has no rows".into()));
    }
    Ok(LabelVector::explicit(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csc::HypothesisFamily;
    use crate::data::make_example1;
    use crate::metrics::Sign;

    #[test]
    fn round_trip_regenerates_hypotheses() {
        let (data, _) = make_example1();
        let members = HypothesisFamily::conjunctions_over(data.features(), &[0, 1])
            .materialize(data.features())
            .unwrap();
        let d = MixedClassifier::new(members[..3].to_vec(), vec![0.5, 0.25, 0.25]).unwrap();
        let lambda = DualVector::vertex(members[4].clone(), Sign::Minus, 10.0);
        let model = Model::new(&d, &lambda, Notion::Fp, 0.01);
        let text = model.to_json().unwrap();
        let back = Model::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.classifier(data.features()).unwrap(), d);
        assert_eq!(back.dual(data.features()).unwrap(), lambda);
    }

    #[test]
    fn rejects_malformed_models() {
        assert!(Model::from_json("{}").is_err());
        assert!(Model::from_json(r#"{"notion":"sp","gamma":0.1,"cap":1,"support":[],"dual":[]}"#).is_err());
    }

    #[test]
    fn predictions_csv() {
        let h = read_predictions("id,D\n1,0\n2, 1\n".as_bytes()).unwrap();
        assert_eq!(h.bits(), &[false, true]);
        match read_predictions("D\n0\n2\n".as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_predictions("x\n1\n".as_bytes()), Err(Error::Schema(_))));
        assert!(read_predictions("D\n".as_bytes()).is_err());
    }
}
