//! Follow the Perturbed Leader over subsets of {0,1}^d.

use rand::Rng;

use super::{substream, PHASE_FTPL};
use crate::error::{Error, Result};

/// An action set with a linear-minimization routine.
pub trait ActionSet {
    fn dim(&self) -> usize;
    /// An action minimizing ⟨costs, a⟩; ties go to the first candidate.
    fn argmin(&self, costs: &[f64]) -> Vec<bool>;
}

/// All of {0,1}^d; a coordinate is set only when its cost is negative.
#[derive(Clone, Copy, Debug)]
pub struct Hypercube(pub usize);

impl ActionSet for Hypercube {
    fn dim(&self) -> usize {
        self.0
    }

    fn argmin(&self, costs: &[f64]) -> Vec<bool> {
        costs.iter().map(|&c| c < 0.0).collect()
    }
}

/// An explicit list of actions.
#[derive(Clone, Debug)]
pub struct FiniteActions {
    actions: Vec<Vec<bool>>,
}

impl FiniteActions {
    pub fn new(actions: Vec<Vec<bool>>) -> Result<Self> {
        let d = actions
            .first()
            .ok_or_else(|| Error::Input("empty action set".into()))?
            .len();
        if let Some(bad) = actions.iter().find(|a| a.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: bad.len(),
            });
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[Vec<bool>] {
        &self.actions
    }
}

impl ActionSet for FiniteActions {
    fn dim(&self) -> usize {
        self.actions[0].len()
    }

    fn argmin(&self, costs: &[f64]) -> Vec<bool> {
        let mut best = (f64::INFINITY, 0);
        for (j, a) in self.actions.iter().enumerate() {
            let c = dot(costs, a);
            if c < best.0 {
                best = (c, j);
            }
        }
        self.actions[best.1].clone()
    }
}

fn dot(costs: &[f64], a: &[bool]) -> f64 {
    costs.iter().zip(a).filter(|(_, &b)| b).map(|(c, _)| c).sum()
}

/// Realized play of one FTPL run.
#[derive(Clone, Debug)]
pub struct FtplRun {
    pub actions: Vec<Vec<bool>>,
    pub total_loss: f64,
    pub best_fixed_loss: f64,
    pub regret: f64,
    pub eta: f64,
}

/// 2·d^{5/4}·M·√T.
pub fn ftpl_regret_bound(d: usize, bound: f64, rounds: usize) -> f64 {
    2.0 * (d as f64).powf(1.25) * bound * (rounds as f64).sqrt()
}

/// Runs FTPL for `rounds` rounds against the oblivious loss sequence
/// `loss(t)`, t = 1..=rounds, with entries in [−bound, bound].
///
/// Round t plays argmin_a η·⟨Σ_{s<t} ℓ^s, a⟩ + ⟨ξ^t, a⟩ with fresh
/// ξ^t ~ U[0,1]^d and η = (1/M)·√(1/(√d·T)).
pub fn ftpl<S, F>(set: &S, mut loss: F, bound: f64, rounds: usize, seed: u64) -> Result<FtplRun>
where
    S: ActionSet + ?Sized,
    F: FnMut(usize) -> Vec<f64>,
{
    let d = set.dim();
    if bound.is_nan() || bound <= 0.0 || rounds == 0 {
        return Err(Error::Input("FTPL needs M > 0 and T ≥ 1".into()));
    }
    let eta = (1.0 / bound) * (1.0 / ((d as f64).sqrt() * rounds as f64)).sqrt();
    let mut cumulative = vec![0.0; d];
    let mut actions = Vec::with_capacity(rounds);
    let mut total = 0.0;
    for t in 1..=rounds {
        let mut rng = substream(seed, PHASE_FTPL, t, 0);
        let costs: Vec<f64> = cumulative.iter().map(|&l| eta * l + rng.gen::<f64>()).collect();
        let a = set.argmin(&costs);
        let l = loss(t);
        if l.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: l.len(),
            });
        }
        if let Some(bad) = l.iter().find(|v| v.is_nan() || v.abs() > bound + 1e-12) {
            return Err(Error::Contract(format!(
                "round {t}: loss {bad} outside [−{bound}, {bound}]"
            )));
        }
        total += dot(&l, &a);
        for (c, v) in cumulative.iter_mut().zip(&l) {
            *c += v;
        }
        actions.push(a);
    }
    let best_fixed_loss = dot(&cumulative, &set.argmin(&cumulative));
    Ok(FtplRun {
        actions,
        total_loss: total,
        best_fixed_loss,
        regret: total - best_fixed_loss,
        eta,
    })
}
