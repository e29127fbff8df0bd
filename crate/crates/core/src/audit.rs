//! Auditing a fixed classifier, and learning from an auditor.
//!
//! Finding the group with the largest α·β is a CSC problem over the
//! protected features: with base rate `b` and per-row weights `w` on the
//! conditioning event, the costs `c1_i = −w_i·(D_i − b)` are minimized by
//! the group whose rate most exceeds `b`, and their negation by the group
//! whose rate falls furthest below it.

use nalgebra::DMatrix;

use crate::csc::{CscInstance, CscOracle};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::game::Lagrangian;
use crate::labels::LabelVector;
use crate::metrics::{check_len, conditioning_mass, group_stats, Certificate, Notion, Sign, Verdict};

/// A classifier's decisions on a sample, ready to audit.
///
/// The dataset's feature matrix is the space groups are defined over
/// (normally just the protected columns).
#[derive(Clone, Debug)]
pub struct AuditInstance {
    data: Dataset,
    decisions: LabelVector,
    notion: Notion,
    gamma: f64,
    gamma_prime: f64,
}

impl AuditInstance {
    pub fn new(data: Dataset, decisions: LabelVector, notion: Notion, gamma: f64, gamma_prime: f64) -> Result<Self> {
        check_len(data.len(), decisions.len())?;
        if !(0.0..=1.0).contains(&gamma) || !(0.0..=gamma).contains(&gamma_prime) {
            return Err(Error::Input(format!(
                "need 0 ≤ γ' ≤ γ ≤ 1, got γ = {gamma}, γ' = {gamma_prime}"
            )));
        }
        conditioning_mass(&data, notion)?;
        Ok(Self {
            data,
            decisions,
            notion,
            gamma,
            gamma_prime,
        })
    }

    /// Projects `data` onto its protected columns and wraps the decisions.
    pub fn from_dataset(
        data: &Dataset,
        decisions: LabelVector,
        notion: Notion,
        gamma: f64,
        gamma_prime: f64,
    ) -> Result<Self> {
        let cols = data.protected_columns();
        let x = data.features().select_columns(cols);
        let names = cols.iter().map(|&c| data.feature_names()[c].clone()).collect();
        let projected = Dataset::new(
            x,
            names,
            (0..cols.len()).collect(),
            data.labels().to_vec(),
            Some(data.weights().to_vec()),
        )?
        .with_label_name(data.label_name());
        Self::new(projected, decisions, notion, gamma, gamma_prime)
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn features(&self) -> &DMatrix<f64> {
        self.data.features()
    }

    pub fn decisions(&self) -> &LabelVector {
        &self.decisions
    }

    pub fn notion(&self) -> Notion {
        self.notion
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime
    }

    fn predictions(&self) -> Vec<f64> {
        self.decisions
            .bits()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

/// The pairs (x_i, D(X_i)) as a labelled dataset.
///
/// For FP only the y = 0 rows are kept, with weights renormalized so the
/// result is the conditional distribution.
pub fn build_learning_instance(inst: &AuditInstance) -> Result<Dataset> {
    let data = inst.data();
    let rows: Vec<usize> = (0..data.len())
        .filter(|&i| match inst.notion {
            Notion::Sp => true,
            Notion::Fp => !data.labels()[i],
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::NotionUndefined(inst.notion.name(), "no rows with y = 0".into()));
    }
    let x = data.features().select_rows(&rows);
    let targets = rows.iter().map(|&i| inst.decisions.get(i)).collect();
    let weights = rows.iter().map(|&i| data.weights()[i]).collect();
    Ok(Dataset::new(
        x,
        data.feature_names().to_vec(),
        data.protected_columns().to_vec(),
        targets,
        Some(weights),
    )?
    .with_label_name("D"))
}

/// The better of f and ¬f as an unfairness certificate, if its product
/// exceeds γ'. Ties go to f.
pub fn certificate_from_hypothesis(f: &LabelVector, inst: &AuditInstance) -> Result<Option<Certificate>> {
    Ok(best_of_pair(f, inst)?.filter(|c| c.product > inst.gamma_prime))
}

fn best_of_pair(f: &LabelVector, inst: &AuditInstance) -> Result<Option<Certificate>> {
    let p = inst.predictions();
    let mut best: Option<Certificate> = None;
    for g in [f.clone(), f.complement()] {
        let s = group_stats(&p, g.bits(), &inst.data, inst.notion)?;
        if best.as_ref().is_none_or(|b| s.product() > b.product) {
            best = Some(Certificate::from_stats(g, &s, inst.notion));
        }
    }
    Ok(best)
}

/// Audits the decisions over the group class searched by `oracle`.
///
/// Solves one CSC problem per direction of disparity and returns the
/// largest certificate found, or `Fair` when no product exceeds γ'. With an
/// exact oracle this is the family maximum.
pub fn audit(inst: &AuditInstance, oracle: &dyn CscOracle) -> Result<Verdict> {
    let game = Lagrangian::new(&inst.data, inst.notion, inst.gamma, 1.0)?;
    let p = inst.predictions();
    let mut best: Option<Certificate> = None;
    for sign in Sign::BOTH {
        let costs = game.auditor_costs(&p, sign)?;
        let f = oracle.solve(&CscInstance::normal_form(inst.features(), costs)?)?;
        if let Some(c) = best_of_pair(&f, inst)? {
            if best.as_ref().is_none_or(|b| c.product > b.product) {
                best = Some(c);
            }
        }
    }
    Ok(match best {
        Some(c) if c.product > inst.gamma_prime => Verdict::Unfair(c),
        _ => Verdict::Fair,
    })
}

/// Uses an auditor as a weak agnostic learner for the targets in `data`.
///
/// The targets are treated as the decisions of a classifier and audited
/// under SP. From a certificate g, returns whichever of g and ¬g agrees
/// with the targets more often (g on ties); `None` when the audit finds
/// nothing above γ'.
pub fn weak_learn_via_audit(
    data: &Dataset,
    oracle: &dyn CscOracle,
    gamma: f64,
    gamma_prime: f64,
) -> Result<Option<LabelVector>> {
    let targets = LabelVector::explicit(data.labels().to_vec());
    let inst = AuditInstance::new(data.clone(), targets, Notion::Sp, gamma, gamma_prime)?;
    let cert = match audit(&inst, oracle)? {
        Verdict::Fair => return Ok(None),
        Verdict::Unfair(c) => c,
    };
    let g = cert.group;
    let not_g = g.complement();
    Ok(Some(if agreement(&g, data) >= agreement(&not_g, data) {
        g
    } else {
        not_g
    }))
}

/// Weighted fraction of rows where `f` equals the label.
pub fn agreement(f: &LabelVector, data: &Dataset) -> f64 {
    f.bits()
        .iter()
        .zip(data.labels())
        .zip(data.weights())
        .filter(|((a, b), _)| a == b)
        .map(|(_, w)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csc::{ExhaustiveOracle, HypothesisFamily};
    use crate::data::make_example1;

    fn example1(notion: Notion, gamma_prime: f64) -> AuditInstance {
        let (data, dec) = make_example1();
        AuditInstance::from_dataset(&data, dec, notion, gamma_prime, gamma_prime).unwrap()
    }

    fn conj_oracle(inst: &AuditInstance) -> ExhaustiveOracle {
        ExhaustiveOracle::new(
            &HypothesisFamily::conjunctions_over(inst.features(), &[0, 1]),
            inst.features(),
        )
        .unwrap()
    }

    fn race_and_gender(inst: &AuditInstance) -> LabelVector {
        let x = inst.features();
        LabelVector::explicit((0..x.nrows()).map(|i| x[(i, 0)] == 1.0 && x[(i, 1)] == 1.0).collect())
    }

    #[test]
    fn learning_instance_shapes() {
        let sp = build_learning_instance(&example1(Notion::Sp, 0.01)).unwrap();
        assert_eq!(sp.len(), 8);
        assert_eq!(sp.labels(), example1(Notion::Sp, 0.01).decisions().bits());
        let fp = build_learning_instance(&example1(Notion::Fp, 0.01)).unwrap();
        assert_eq!(fp.len(), 4);
        assert!(fp.weights().iter().all(|&w| w == 0.25));

        let (data, _) = make_example1();
        let zeros = LabelVector::constant(8, false);
        let inst = AuditInstance::from_dataset(&data, zeros, Notion::Sp, 0.1, 0.1).unwrap();
        assert!(build_learning_instance(&inst).unwrap().labels().iter().all(|&b| !b));
    }

    #[test]
    fn certificate_from_conjunction() {
        let inst = example1(Notion::Sp, 0.05);
        let c = certificate_from_hypothesis(&race_and_gender(&inst), &inst)
            .unwrap()
            .unwrap();
        assert_eq!(c.product, 0.125);
        assert!(certificate_from_hypothesis(&LabelVector::constant(8, true), &inst)
            .unwrap()
            .is_none());
    }

    #[test]
    fn perfect_predictor_at_half_base_rate() {
        // the decision vector itself is a group whose product is 1/4
        let inst = example1(Notion::Sp, 0.0);
        let c = certificate_from_hypothesis(inst.decisions(), &inst).unwrap().unwrap();
        assert!(c.product >= 0.25 - 1e-12);
    }

    #[test]
    fn audit_example1() {
        let inst = example1(Notion::Fp, 0.01);
        let cert = match audit(&inst, &conj_oracle(&inst)).unwrap() {
            Verdict::Unfair(c) => c,
            Verdict::Fair => panic!("expected a certificate"),
        };
        assert_eq!(cert.product, 0.0625);

        let x = inst.features();
        let marginals = ExhaustiveOracle::from_members(vec![
            LabelVector::explicit((0..8).map(|i| x[(i, 0)] == 1.0).collect()),
            LabelVector::explicit((0..8).map(|i| x[(i, 1)] == 1.0).collect()),
        ])
        .unwrap();
        for notion in [Notion::Sp, Notion::Fp] {
            assert!(audit(&example1(notion, 0.01), &marginals).unwrap().is_fair());
        }

        let (data, _) = make_example1();
        let zeros =
            AuditInstance::from_dataset(&data, LabelVector::constant(8, false), Notion::Sp, 0.001, 0.001).unwrap();
        assert!(audit(&zeros, &conj_oracle(&zeros)).unwrap().is_fair());
    }

    #[test]
    fn weak_learner_recovers_member() {
        let inst = example1(Notion::Sp, 0.0);
        let oracle = conj_oracle(&inst);
        // targets equal to a family member with base rate ½
        let x = inst.features();
        let race: Vec<bool> = (0..8).map(|i| x[(i, 0)] == 1.0).collect();
        let data = Dataset::new(x.clone(), inst.data().feature_names().to_vec(), vec![0, 1], race, None).unwrap();
        let h = weak_learn_via_audit(&data, &oracle, 0.1, 0.1).unwrap().unwrap();
        assert!(agreement(&h, &data) >= 0.75);

        let constant = Dataset::new(
            data.features().clone(),
            data.feature_names().to_vec(),
            data.protected_columns().to_vec(),
            vec![true; 8],
            None,
        )
        .unwrap();
        assert!(weak_learn_via_audit(&constant, &oracle, 0.0, 0.0).unwrap().is_none());
    }

    #[test]
    fn bad_thresholds_rejected() {
        let (data, dec) = make_example1();
        assert!(AuditInstance::from_dataset(&data, dec, Notion::Sp, 0.01, 0.02).is_err());
    }
}
