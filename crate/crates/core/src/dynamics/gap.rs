use crate::csc::{CscInstance, CscOracle};
use crate::error::Result;
use crate::game::{DualVector, Lagrangian};
use crate::labels::MixedClassifier;

/// How far (D, λ) is from an equilibrium of the Lagrangian game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityGap {
    /// L(D, λ) − min_h L(h, λ).
    pub learner: f64,
    /// max_λ' L(D, λ') − L(D, λ).
    pub auditor: f64,
    /// False when either oracle is heuristic; the gaps are then lower bounds.
    pub exact: bool,
}

impl DualityGap {
    pub fn total(&self) -> f64 {
        self.learner + self.auditor
    }
}

/// Measures both gaps with one best response per player. Tiny negative
/// values from rounding are clamped to zero.
pub fn duality_gap(
    d: &MixedClassifier,
    lambda: &DualVector,
    game: &Lagrangian<'_>,
    learner: &dyn CscOracle,
    auditor: &dyn CscOracle,
) -> Result<DualityGap> {
    let p = d.expected_predictions();
    let costs = game.learner_cost_vector(lambda)?;
    let h = learner.solve(&CscInstance::normal_form(game.data().features(), costs.clone())?)?;
    let on_d: f64 = costs.iter().zip(&p).map(|(c, pi)| c * pi).sum();
    let on_h: f64 = costs.iter().zip(h.bits()).filter(|(_, &b)| b).map(|(c, _)| c).sum();

    let violation = game.max_violation_soft(&p, auditor)?;
    let best = (game.cap() * violation.value).max(0.0);
    let current = game.dual_term(&p, lambda)?;

    Ok(DualityGap {
        learner: (on_d - on_h).max(0.0),
        auditor: (best - current).max(0.0),
        exact: learner.is_exact() && auditor.is_exact(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csc::ExhaustiveOracle;
    use crate::data::make_d4;
    use crate::labels::LabelVector;
    use crate::metrics::{Notion, Sign};

    fn every_labelling() -> ExhaustiveOracle {
        ExhaustiveOracle::from_members(
            (0u32..16)
                .map(|m| LabelVector::explicit((0..4).map(|i| m & (1 << i) != 0).collect()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn optimal_fair_point_has_zero_gap() {
        // all-zeros is both accurate-enough and perfectly fair when y=1 is rare
        let (data, _, _) = make_d4();
        let zeros = MixedClassifier::point(LabelVector::constant(4, false));
        let consts =
            ExhaustiveOracle::from_members(vec![LabelVector::constant(4, false), LabelVector::constant(4, true)])
                .unwrap();
        let game = Lagrangian::new(&data, Notion::Fp, 0.0, 10.0).unwrap();
        let gap = duality_gap(&zeros, &DualVector::zero(10.0), &game, &consts, &every_labelling()).unwrap();
        assert_eq!(gap.total(), 0.0);
        assert!(gap.exact);
    }

    #[test]
    fn gaps_are_nonnegative() {
        let (data, g, h) = make_d4();
        let all = every_labelling();
        let game = Lagrangian::new(&data, Notion::Sp, 0.02, 5.0).unwrap();
        let d = MixedClassifier::new(vec![g.clone(), h.clone()], vec![0.4, 0.6]).unwrap();
        for lambda in [
            DualVector::zero(5.0),
            DualVector::vertex(g.clone(), Sign::Plus, 5.0),
            DualVector::vertex(h, Sign::Minus, 2.5),
        ] {
            let gap = duality_gap(&d, &lambda, &game, &all, &all).unwrap();
            assert!(gap.learner >= 0.0 && gap.auditor >= 0.0);
        }
    }
}
