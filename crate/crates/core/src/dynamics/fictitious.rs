use log::{debug, info};

use super::{as_reals, FitResult, GroupRegistry, PlayCounter, RoundRecord, RunTrace};
use crate::csc::{CscInstance, CscOracle};
use crate::data::Dataset;
use crate::error::Result;
use crate::game::{DualVector, FairnessParams, Lagrangian};
use crate::labels::LabelVector;
use crate::metrics::error_rate;

/// Fair fictitious play.
///
/// Starts from h⁰ = all zeros and λ⁰ = 0. In round t the Learner best
/// responds to the average dual λ̄ over λ⁰..λ^{t−1}, and the Auditor best
/// responds to the uniform mixture D̄ over h⁰..h^{t−1}. The returned pair
/// averages all T+1 plays of each side.
pub fn fair_fict_play(
    data: &Dataset,
    learner: &dyn CscOracle,
    auditor: &dyn CscOracle,
    params: &FairnessParams,
) -> Result<FitResult> {
    params.validate()?;
    let game = Lagrangian::from_params(data, params)?;
    let n = data.len();
    let cap = params.cap;

    let h0 = LabelVector::constant(n, false);
    let mut plays = PlayCounter::default();
    plays.push(&h0);
    let mut p_sum = vec![0.0; n];
    let mut v_sum = vec![0.0; n];
    let mut l1_sum = 0.0;
    let mut dual_sum = DualVector::zero(cap);
    let mut registry = GroupRegistry::default();
    let mut trace = RunTrace::new();

    for t in 1..=params.rounds {
        let scale = 1.0 / t as f64;
        let p_bar: Vec<f64> = p_sum.iter().map(|s| s * scale).collect();
        let v_bar: Vec<f64> = v_sum.iter().map(|s| s * scale).collect();

        let costs = game.learner_costs_from_profile(&v_bar, 1.0);
        let h = learner
            .solve(&CscInstance::normal_form(data.features(), costs.clone())?)
            .map_err(|e| e.at_round(t))?;
        let resp = game
            .auditor_best_response_soft(&p_bar, auditor)
            .map_err(|e| e.at_round(t))?;

        let played: f64 = costs.iter().zip(&p_bar).map(|(c, p)| c * p).sum();
        let best: f64 = costs.iter().zip(as_reals(&h)).map(|(c, b)| c * b).sum();
        let dual_term = game.value_from_profile(&p_bar, &v_bar, l1_sum * scale)? - error_rate(&p_bar, data)?;
        let gap_a = (cap * resp.violation.value).max(0.0) - dual_term;

        let violated = !resp.dual.is_zero();
        let group_id = if violated {
            registry.id(&resp.violation.group) as i64
        } else {
            -1
        };
        let record = RoundRecord {
            t,
            error: error_rate(&p_bar, data)?,
            max_violation: resp.violation.stats.product(),
            phi: resp.violation.value,
            group_id,
            regret: None,
            gap_l: (played - best).max(0.0),
            gap_a: gap_a.max(0.0),
        };
        debug!("fictplay round {t}: {record:?}");
        if t % (params.rounds / 10).max(1) == 0 {
            info!(
                "fictplay round {t}/{}: error {:.4}, unfairness {:.4}, gap {:.4}",
                params.rounds,
                record.error,
                record.max_violation,
                record.gap_l + record.gap_a
            );
        }
        trace.push(record)?;

        for (s, b) in p_sum.iter_mut().zip(as_reals(&h)) {
            *s += b;
        }
        plays.push(&h);
        if violated {
            let v = resp.violation;
            let profile = game.group_profile(v.group.bits())?;
            let w = cap * v.sign.factor();
            for (s, q) in v_sum.iter_mut().zip(profile) {
                *s += w * q;
            }
            l1_sum += cap;
            dual_sum.add(v.group, v.sign, cap);
        }
    }

    let dual = dual_sum.scaled(1.0 / (params.rounds + 1) as f64);
    dual.validate()?;
    Ok(FitResult {
        classifier: plays.into_classifier()?,
        dual,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csc::{ExhaustiveOracle, HypothesisFamily};
    use crate::data::make_example1;
    use crate::metrics::Notion;

    fn example1_oracles() -> (Dataset, ExhaustiveOracle) {
        let (data, _) = make_example1();
        let conj = ExhaustiveOracle::new(
            &HypothesisFamily::conjunctions_over(data.features(), &[0, 1]),
            data.features(),
        )
        .unwrap();
        (data, conj)
    }

    #[test]
    fn unconstrained_when_gamma_is_one() {
        let (data, conj) = example1_oracles();
        let params = FairnessParams::practical(Notion::Fp, 1.0, 20);
        let fit = fair_fict_play(&data, &conj, &conj, &params).unwrap();
        assert!(fit.dual.is_zero());
        assert!(fit.trace.records().iter().all(|r| r.group_id == -1));
        // every h^t for t ≥ 1 is the same unconstrained minimizer
        assert_eq!(fit.classifier.support().len(), 2);
        assert!((fit.classifier.probs()[1] - 20.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn one_trace_record_per_round() {
        let (data, conj) = example1_oracles();
        let params = FairnessParams::practical(Notion::Sp, 0.01, 30);
        let fit = fair_fict_play(&data, &conj, &conj, &params).unwrap();
        let ts: Vec<usize> = fit.trace.records().iter().map(|r| r.t).collect();
        assert_eq!(ts, (1..=30).collect::<Vec<_>>());
        assert!(fit.trace.records().iter().all(|r| r.gap_l >= 0.0 && r.gap_a >= 0.0));
    }

    #[test]
    fn single_row_learns_its_label_in_one_round() {
        let data = Dataset::new(
            nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]),
            vec!["a".into()],
            vec![0],
            vec![true],
            None,
        )
        .unwrap();
        let all = ExhaustiveOracle::from_members(vec![LabelVector::constant(1, false), LabelVector::constant(1, true)])
            .unwrap();
        let params = FairnessParams::practical(Notion::Sp, 0.0, 1);
        let fit = fair_fict_play(&data, &all, &all, &params).unwrap();
        let support = fit.classifier.support();
        assert_eq!(support.last().unwrap().bits(), &[true]);
    }
}
