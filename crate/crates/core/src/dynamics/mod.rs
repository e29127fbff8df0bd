//! Equilibrium computation for the Lagrangian game.
//!
//! [`fair_fict_play`] plays exact best responses against the running
//! averages. [`fair_nr`] runs FTPL for the Learner against a best-responding
//! Auditor. Both record one [`RoundRecord`] per round.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::DualVector;
use crate::labels::{LabelVector, MixedClassifier};

mod fictitious;
mod ftpl;
mod gap;
mod matrix_game;
mod no_regret;
mod trace;

pub use fictitious::fair_fict_play;
pub use ftpl::{ftpl, ftpl_regret_bound, ActionSet, FiniteActions, FtplRun, Hypercube};
pub use gap::{duality_gap, DualityGap};
pub use matrix_game::{solve_matrix_game, MatrixGameSolution};
pub use no_regret::{fair_nr, learner_regret_bound, PerturbedLearner};
pub use trace::{RoundRecord, RunTrace};

/// Output of a dynamics run.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub classifier: MixedClassifier,
    pub dual: DualVector,
    pub trace: RunTrace,
}

/// Random substreams: one generator per (phase, round, sample) so that
/// parallel draws are reproducible regardless of scheduling.
pub(crate) fn substream(seed: u64, phase: u8, round: usize, sample: usize) -> ChaCha8Rng {
    debug_assert!(round < 1 << 32 && sample < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((phase as u64) << 56) | ((round as u64) << 24) | sample as u64);
    rng
}

pub(crate) const PHASE_FTPL: u8 = 1;
pub(crate) const PHASE_OUTPUT_ROUND: u8 = 2;
pub(crate) const PHASE_OUTPUT_NOISE: u8 = 3;

/// Assigns stable ids to groups in first-seen order.
#[derive(Default)]
pub(crate) struct GroupRegistry {
    ids: HashMap<Vec<bool>, usize>,
}

impl GroupRegistry {
    pub(crate) fn id(&mut self, g: &LabelVector) -> usize {
        let next = self.ids.len();
        *self.ids.entry(g.bits().to_vec()).or_insert(next)
    }
}

/// Counts repeated plays and turns them into an empirical distribution.
#[derive(Default)]
pub(crate) struct PlayCounter {
    index: HashMap<Vec<bool>, usize>,
    items: Vec<(LabelVector, usize)>,
    total: usize,
}

impl PlayCounter {
    pub(crate) fn push(&mut self, h: &LabelVector) {
        self.total += 1;
        match self.index.get(h.bits()) {
            Some(&j) => self.items[j].1 += 1,
            None => {
                self.index.insert(h.bits().to_vec(), self.items.len());
                self.items.push((h.clone(), 1));
            }
        }
    }

    pub(crate) fn into_classifier(self) -> crate::Result<MixedClassifier> {
        MixedClassifier::from_counts(self.items, self.total)
    }
}

pub(crate) fn as_reals(h: &LabelVector) -> impl Iterator<Item = f64> + '_ {
    h.bits().iter().map(|&b| if b { 1.0 } else { 0.0 })
}
