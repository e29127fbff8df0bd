use log::{debug, info};
use rand::Rng;
use rayon::prelude::*;

use super::{
    as_reals, substream, FitResult, GroupRegistry, PlayCounter, RoundRecord, RunTrace, PHASE_FTPL, PHASE_OUTPUT_NOISE,
    PHASE_OUTPUT_ROUND,
};
use crate::csc::{CscInstance, CscOracle};
use crate::data::Dataset;
use crate::error::Result;
use crate::game::{DualVector, FairnessParams, Lagrangian};
use crate::labels::LabelVector;
use crate::metrics::error_rate;

/// 2·n^{1/4}·(1+C)·√T.
pub fn learner_regret_bound(n: usize, cap: f64, rounds: usize) -> f64 {
    2.0 * (n as f64).powf(0.25) * (1.0 + cap) * (rounds as f64).sqrt()
}

/// The FTPL Learner: solves cumulative-loss CSC problems perturbed by
/// ξ/η with ξ ~ U[0,1]^n.
#[derive(Clone, Copy)]
pub struct PerturbedLearner<'a> {
    features: &'a nalgebra::DMatrix<f64>,
    oracle: &'a dyn CscOracle,
    eta: f64,
    seed: u64,
}

impl<'a> PerturbedLearner<'a> {
    pub fn new(data: &'a Dataset, oracle: &'a dyn CscOracle, eta: f64, seed: u64) -> Self {
        Self {
            features: data.features(),
            oracle,
            eta,
            seed,
        }
    }

    fn solve_one(&self, cumulative: &[f64], phase: u8, round: usize, sample: usize) -> Result<LabelVector> {
        let mut rng = substream(self.seed, phase, round, sample);
        let c1: Vec<f64> = cumulative.iter().map(|c| c + rng.gen::<f64>() / self.eta).collect();
        self.oracle.solve(&CscInstance::normal_form(self.features, c1)?)
    }

    /// `m` independent perturbed solutions for round `round`, in sample order.
    pub fn sample(&self, cumulative: &[f64], round: usize, m: usize) -> Result<Vec<LabelVector>> {
        (0..m)
            .into_par_iter()
            .map(|s| self.solve_one(cumulative, PHASE_FTPL, round, s))
            .collect()
    }
}

/// Mean prediction of a set of sampled hypotheses.
fn empirical_mean(hs: &[LabelVector], n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    for h in hs {
        for (pi, b) in p.iter_mut().zip(as_reals(h)) {
            *pi += b;
        }
    }
    let m = hs.len() as f64;
    p.iter_mut().for_each(|v| *v /= m);
    p
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fair no-regret dynamics.
///
/// The Learner runs FTPL on the cumulative loss Σ_{s<t} LC(λ^s), drawing
/// `m` perturbed solutions per round; the Auditor best responds to their
/// empirical mixture. The output classifier is `m` fresh FTPL samples taken
/// at uniformly random rounds, paired with the average dual.
pub fn fair_nr(
    data: &Dataset,
    learner: &dyn CscOracle,
    auditor: &dyn CscOracle,
    params: &FairnessParams,
) -> Result<FitResult> {
    params.validate()?;
    let game = Lagrangian::from_params(data, params)?;
    let n = data.len();
    let cap = params.cap;
    let rounds = params.rounds;
    let eta = params.eta_for(n);
    let sampler = PerturbedLearner::new(data, learner, eta, params.seed);

    let mut registry = GroupRegistry::default();
    // profiles are indexed by their own registry; trace ids may skip groups never played
    let mut profile_ids = GroupRegistry::default();
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    // (group id, signed weight) of λ^t, or None for λ^t = 0
    let mut history: Vec<Option<(usize, f64)>> = Vec::with_capacity(rounds);
    let mut v_sum = vec![0.0; n];
    let mut l1_sum = 0.0;
    let mut p_sum = vec![0.0; n];
    let mut played_loss = 0.0;
    let mut dual_sum = DualVector::zero(cap);
    let mut trace = RunTrace::new();

    for t in 1..=rounds {
        let cumulative = game.learner_costs_from_profile(&v_sum, (t - 1) as f64);
        let hs = sampler
            .sample(&cumulative, t, params.samples)
            .map_err(|e| e.at_round(t))?;
        let p_t = empirical_mean(&hs, n);
        let resp = game
            .auditor_best_response_soft(&p_t, auditor)
            .map_err(|e| e.at_round(t))?;

        let step = if resp.dual.is_zero() {
            None
        } else {
            let v = &resp.violation;
            let id = profile_ids.id(&v.group);
            if id == profiles.len() {
                profiles.push(game.group_profile(v.group.bits())?);
            }
            dual_sum.add(v.group.clone(), v.sign, cap);
            l1_sum += cap;
            Some((id, cap * v.sign.factor()))
        };
        let step_profile: Vec<f64> = match step {
            Some((id, w)) => profiles[id].iter().map(|q| w * q).collect(),
            None => vec![0.0; n],
        };
        played_loss += dot(&game.learner_costs_from_profile(&step_profile, 1.0), &p_t);
        for (s, q) in v_sum.iter_mut().zip(&step_profile) {
            *s += q;
        }
        for (s, p) in p_sum.iter_mut().zip(&p_t) {
            *s += p;
        }
        history.push(step);

        // diagnostics for the average play after t rounds
        let scale = 1.0 / t as f64;
        let total = game.learner_costs_from_profile(&v_sum, t as f64);
        let h_best = learner
            .solve(&CscInstance::normal_form(data.features(), total.clone())?)
            .map_err(|e| e.at_round(t))?;
        let best_loss: f64 = total.iter().zip(as_reals(&h_best)).map(|(c, b)| c * b).sum();
        let p_bar: Vec<f64> = p_sum.iter().map(|s| s * scale).collect();
        let v_bar: Vec<f64> = v_sum.iter().map(|s| s * scale).collect();
        let audit = game.max_violation_soft(&p_bar, auditor).map_err(|e| e.at_round(t))?;
        let err_bar = error_rate(&p_bar, data)?;
        let dual_term = game.value_from_profile(&p_bar, &v_bar, l1_sum * scale)? - err_bar;
        let record = RoundRecord {
            t,
            error: err_bar,
            max_violation: audit.stats.product(),
            phi: audit.value,
            group_id: if audit.value > 0.0 {
                registry.id(&audit.group) as i64
            } else {
                -1
            },
            regret: Some(played_loss - best_loss),
            gap_l: ((dot(&total, &p_bar) - best_loss) * scale).max(0.0),
            gap_a: ((cap * audit.value).max(0.0) - dual_term).max(0.0),
        };
        debug!("nr round {t}: {record:?}");
        if t % (rounds / 10).max(1) == 0 {
            info!(
                "nr round {t}/{rounds}: error {:.4}, unfairness {:.4}, gap {:.4}",
                record.error,
                record.max_violation,
                record.gap_l + record.gap_a
            );
        }
        trace.push(record)?;
    }

    let classifier = sample_average_play(&game, &sampler, &history, &profiles, params)?;
    let dual = dual_sum.scaled(1.0 / rounds as f64);
    dual.validate()?;
    Ok(FitResult {
        classifier,
        dual,
        trace,
    })
}

/// Draws `m` hypotheses, each from the FTPL distribution of a uniformly
/// random round, replaying the dual history to rebuild cumulative losses.
fn sample_average_play(
    game: &Lagrangian<'_>,
    sampler: &PerturbedLearner<'_>,
    history: &[Option<(usize, f64)>],
    profiles: &[Vec<f64>],
    params: &FairnessParams,
) -> Result<crate::labels::MixedClassifier> {
    let n = game.data().len();
    let m = params.samples;
    let mut draws: Vec<(usize, usize)> = (0..m)
        .map(|s| {
            let r = substream(params.seed, PHASE_OUTPUT_ROUND, 0, s).gen_range(1..=history.len());
            (r, s)
        })
        .collect();
    draws.sort_unstable();

    let mut cumulative = vec![Vec::new(); m];
    let mut v = vec![0.0; n];
    let mut replayed = 1;
    for &(r, s) in &draws {
        while replayed < r {
            if let Some((id, w)) = history[replayed - 1] {
                for (vi, q) in v.iter_mut().zip(&profiles[id]) {
                    *vi += w * q;
                }
            }
            replayed += 1;
        }
        cumulative[s] = game.learner_costs_from_profile(&v, (r - 1) as f64);
    }

    let hs: Vec<LabelVector> = cumulative
        .par_iter()
        .enumerate()
        .map(|(s, c)| sampler.solve_one(c, PHASE_OUTPUT_NOISE, 0, s))
        .collect::<Result<_>>()?;
    let mut plays = PlayCounter::default();
    for h in &hs {
        plays.push(h);
    }
    plays.into_classifier()
}
