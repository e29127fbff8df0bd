//! The Lagrangian zero-sum game between a Learner (distributions over H)
//! and an Auditor (dual weights over signed groups, ‖λ‖₁ ≤ C).
//!
//! With per-row expected predictions `p` and dual profile
//! `v_i = Σ_g (λ⁺_g − λ⁻_g)·(q_g − g_i)` (rows in the conditioning event
//! only, `q_g = Pr[g=1 | event]`), the Lagrangian is
//! `L(p, λ) = err(p) + Σ_i w_i·p_i·v_i − γ·‖λ‖₁`. Both best responses reduce
//! to one CSC call per sign.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::csc::{CscInstance, CscOracle};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::labels::{LabelSpec, LabelVector, MixedClassifier};
use crate::metrics::{check_len, conditioning_mass, error_rate, group_stats, GroupStats, Notion, Sign};

/// Default dual bound in practical mode.
pub const DEFAULT_CAP: f64 = 10.0;
/// Default number of FTPL samples per round in practical mode.
pub const DEFAULT_SAMPLES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct DualEntry {
    pub group: LabelVector,
    pub sign: Sign,
    pub weight: f64,
}

/// Sparse nonnegative dual weights over (group, sign) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector {
    entries: Vec<DualEntry>,
    index: HashMap<(Vec<bool>, Sign), usize>,
    bound: f64,
}

impl DualVector {
    pub fn zero(bound: f64) -> Self {
        Self {
            entries: Vec::new(),
            index: HashMap::new(),
            bound,
        }
    }

    /// The vertex of Λ with weight C on a single (group, sign).
    pub fn vertex(group: LabelVector, sign: Sign, bound: f64) -> Self {
        let mut d = Self::zero(bound);
        d.add(group, sign, bound);
        d
    }

    /// Adds weight to an entry, merging identical (bits, sign) keys.
    pub fn add(&mut self, group: LabelVector, sign: Sign, weight: f64) {
        let key = (group.bits().to_vec(), sign);
        match self.index.get(&key) {
            Some(&j) => self.entries[j].weight += weight,
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(DualEntry { group, sign, weight });
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut d = self.clone();
        for e in &mut d.entries {
            e.weight *= factor;
        }
        d
    }

    pub fn entries(&self) -> &[DualEntry] {
        &self.entries
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.weight == 0.0)
    }

    /// Checks nonnegativity and ‖λ‖₁ ≤ C + 1e-12.
    pub fn validate(&self) -> Result<()> {
        if self.entries.iter().any(|e| e.weight.is_nan() || e.weight < 0.0) {
            return Err(Error::Contract("negative dual weight".into()));
        }
        if self.l1() > self.bound + 1e-12 {
            return Err(Error::Contract(format!(
                "dual norm {} exceeds bound {}",
                self.l1(),
                self.bound
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<DualEntryJson> {
        self.entries
            .iter()
            .map(|e| DualEntryJson {
                sign: e.sign,
                weight: e.weight,
                group: e.group.to_spec(),
            })
            .collect()
    }

    pub fn from_json(entries: &[DualEntryJson], bound: f64, features: &nalgebra::DMatrix<f64>) -> Result<Self> {
        let mut d = Self::zero(bound);
        for e in entries {
            d.add(LabelVector::from_spec(&e.group, features)?, e.sign, e.weight);
        }
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEntryJson {
    pub sign: Sign,
    pub weight: f64,
    pub group: LabelSpec,
}

/// Parameters of the fair-learning dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    pub gamma: f64,
    /// Dual bound C.
    pub cap: f64,
    /// Target accuracy ν (theory mode).
    pub nu: f64,
    /// Failure probability δ (theory mode).
    pub delta: f64,
    pub rounds: usize,
    /// Learner samples per round (no-regret dynamics).
    pub samples: usize,
    /// FTPL noise scale η; `None` picks the default for `schedule`.
    pub eta: Option<f64>,
    pub notion: Notion,
    pub seed: u64,
    pub schedule: Schedule,
}

/// Which default FTPL noise scale applies when η is not given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// η = n^{3/2}/((1+C)·√T).
    ///
    /// The worst-case value below perturbs so heavily at practical T that
    /// the Learner barely reacts to the Auditor; this one is n^{3/4} times
    /// larger, which sits in the flat optimum of the average-play gap on
    /// small synthetic games.
    #[default]
    Practical,
    /// η = n/(1+C)·√(1/(√n·T)), the value with a proven regret bound.
    Theory,
}

impl FairnessParams {
    /// C = 10, m = 20, the given number of rounds.
    pub fn practical(notion: Notion, gamma: f64, rounds: usize) -> Self {
        Self {
            gamma,
            cap: DEFAULT_CAP,
            nu: 0.1,
            delta: 0.05,
            rounds,
            samples: DEFAULT_SAMPLES,
            eta: None,
            notion,
            seed: 0,
            schedule: Schedule::Practical,
        }
    }

    /// Parameter schedule with provable guarantees, resolved in the order
    /// C, then T, then m. `vc_dim` is the VC dimension of the group class;
    /// the unspecified absolute constant is taken as 1.
    pub fn theory(notion: Notion, gamma: f64, nu: f64, delta: f64, n: usize, vc_dim: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Input("theory parameters need ν, δ in (0, 1)".into()));
        }
        let cap = 1.0 / nu;
        let nf = n as f64;
        let log2d = (2.0 / delta).ln();
        let t = (4.0 * nf.sqrt() * log2d / nu.powi(4)).ceil();
        let m = ((2.0 * t / delta).ln() * vc_dim * nf.ln() * cap * cap * t / (nf.sqrt() * (1.0 + cap).powi(2) * log2d))
            .ceil();
        let params = Self {
            gamma,
            cap,
            nu,
            delta,
            rounds: t as usize,
            samples: (m as usize).max(1),
            eta: None,
            notion,
            seed: 0,
            schedule: Schedule::Theory,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Input(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(Error::Input("dual bound C must be positive".into()));
        }
        if self.rounds == 0 || self.samples == 0 {
            return Err(Error::Input("rounds and samples must be at least 1".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::Input("eta must be positive".into()));
            }
        }
        Ok(())
    }

    /// FTPL noise scale for a dataset of `n` rows.
    pub fn eta_for(&self, n: usize) -> f64 {
        self.eta.unwrap_or_else(|| {
            let nf = n as f64;
            let t = self.rounds as f64;
            match self.schedule {
                Schedule::Practical => nf.powf(1.5) / ((1.0 + self.cap) * t.sqrt()),
                Schedule::Theory => nf / (1.0 + self.cap) * (1.0 / (nf.sqrt() * t)).sqrt(),
            }
        })
    }
}

/// The most violated signed constraint found for a classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub group: LabelVector,
    pub sign: Sign,
    /// Φ_sign(D, group).
    pub value: f64,
    pub stats: GroupStats,
}

/// Auditor's best response plus the violation it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditorResponse {
    pub dual: DualVector,
    pub violation: Violation,
}

/// The game for one dataset, notion, γ and dual bound C.
#[derive(Clone, Copy, Debug)]
pub struct Lagrangian<'a> {
    data: &'a Dataset,
    notion: Notion,
    gamma: f64,
    cap: f64,
    mass: f64,
}

impl<'a> Lagrangian<'a> {
    pub fn new(data: &'a Dataset, notion: Notion, gamma: f64, cap: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Input(format!("gamma {gamma} outside [0, 1]")));
        }
        if cap.is_nan() || cap <= 0.0 {
            return Err(Error::Input("dual bound C must be positive".into()));
        }
        let mass = conditioning_mass(data, notion)?;
        Ok(Self {
            data,
            notion,
            gamma,
            cap,
            mass,
        })
    }

    pub fn from_params(data: &'a Dataset, params: &FairnessParams) -> Result<Self> {
        Self::new(data, params.notion, params.gamma, params.cap)
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn notion(&self) -> Notion {
        self.notion
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    fn in_event(&self, i: usize) -> bool {
        self.notion.counts(self.data.labels()[i])
    }

    /// Φ_sign(D, g) from expected predictions.
    pub fn phi_soft(&self, p: &[f64], g: &[bool], sign: Sign) -> Result<f64> {
        let s = group_stats(p, g, self.data, self.notion)?;
        Ok(phi_from_stats(&s, sign, self.gamma))
    }

    /// Φ_sign(D, g) = ±α·(base − group) − γ.
    pub fn phi(&self, d: &MixedClassifier, g: &LabelVector, sign: Sign) -> Result<f64> {
        self.phi_soft(&d.expected_predictions(), g.bits(), sign)
    }

    /// Per-row profile of one group: `q_g − g_i` on event rows, 0 elsewhere.
    pub fn group_profile(&self, g: &[bool]) -> Result<Vec<f64>> {
        check_len(self.data.len(), g.len())?;
        let size: f64 = (0..self.data.len())
            .filter(|&i| g[i] && self.in_event(i))
            .map(|i| self.data.weights()[i])
            .sum();
        let q = size / self.mass;
        Ok((0..self.data.len())
            .map(|i| {
                if self.in_event(i) {
                    q - if g[i] { 1.0 } else { 0.0 }
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// `v_i = Σ_g (λ⁺_g − λ⁻_g)·(q_g − g_i)`.
    pub fn dual_profile(&self, lambda: &DualVector) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.data.len()];
        for e in lambda.entries() {
            let prof = self.group_profile(e.group.bits())?;
            let s = e.sign.factor() * e.weight;
            for (vi, pi) in v.iter_mut().zip(prof) {
                *vi += s * pi;
            }
        }
        Ok(v)
    }

    /// Learner costs for a dual profile, with the error term scaled by
    /// `error_scale` (1 for LC(λ); t for a sum of t rounds).
    pub fn learner_costs_from_profile(&self, v: &[f64], error_scale: f64) -> Vec<f64> {
        self.data
            .labels()
            .iter()
            .zip(self.data.weights())
            .zip(v)
            .map(|((&y, &w), &vi)| {
                let base = if y { -w } else { w };
                error_scale * base + w * vi
            })
            .collect()
    }

    /// LC(λ): the cost of labelling each row 1 (cost of 0 is zero).
    pub fn learner_cost_vector(&self, lambda: &DualVector) -> Result<Vec<f64>> {
        Ok(self.learner_costs_from_profile(&self.dual_profile(lambda)?, 1.0))
    }

    /// L(p, λ) from a precomputed dual profile and norm.
    pub fn value_from_profile(&self, p: &[f64], v: &[f64], l1: f64) -> Result<f64> {
        let err = error_rate(p, self.data)?;
        let penalty: f64 = self
            .data
            .weights()
            .iter()
            .zip(p)
            .zip(v)
            .map(|((w, pi), vi)| w * pi * vi)
            .sum();
        Ok(err + penalty - self.gamma * l1)
    }

    /// Σ_g λ⁺Φ₊(D, g) + λ⁻Φ₋(D, g), evaluated entry by entry.
    pub fn dual_term(&self, p: &[f64], lambda: &DualVector) -> Result<f64> {
        let mut total = 0.0;
        for e in lambda.entries() {
            total += e.weight * self.phi_soft(p, e.group.bits(), e.sign)?;
        }
        Ok(total)
    }

    /// U(D, λ) = err(D) + Σ λ·Φ(D, ·).
    pub fn payoff(&self, d: &MixedClassifier, lambda: &DualVector) -> Result<f64> {
        let p = d.expected_predictions();
        Ok(error_rate(&p, self.data)? + self.dual_term(&p, lambda)?)
    }

    pub fn payoff_pure(&self, h: &LabelVector, lambda: &DualVector) -> Result<f64> {
        self.payoff(&MixedClassifier::point(h.clone()), lambda)
    }

    /// Learner best response to λ: one CSC call with c0 = 0, c1 = LC(λ).
    pub fn learner_best_response(&self, lambda: &DualVector, oracle: &dyn CscOracle) -> Result<LabelVector> {
        let costs = self.learner_cost_vector(lambda)?;
        oracle.solve(&CscInstance::normal_form(self.data.features(), costs)?)
    }

    /// CSC costs whose minimizer over groups maximizes Φ_sign(p, ·).
    ///
    /// For `Plus`: c1_i = −w_i·(base − p_i) on event rows, 0 elsewhere, so
    /// the cost of a group g is −(Φ₊(p, g) + γ). `Minus` negates.
    pub fn auditor_costs(&self, p: &[f64], sign: Sign) -> Result<Vec<f64>> {
        let base = crate::metrics::base_rate(p, self.data, self.notion)?;
        Ok((0..self.data.len())
            .map(|i| {
                if self.in_event(i) {
                    -sign.factor() * self.data.weights()[i] * (base - p[i])
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Solves both signed auditing problems and returns the larger Φ
    /// (Plus on ties), evaluated exactly.
    pub fn max_violation_soft(&self, p: &[f64], oracle: &dyn CscOracle) -> Result<Violation> {
        let mut best: Option<Violation> = None;
        for sign in Sign::BOTH {
            let inst = CscInstance::normal_form(self.data.features(), self.auditor_costs(p, sign)?)?;
            let g = oracle.solve(&inst)?;
            let stats = group_stats(p, g.bits(), self.data, self.notion)?;
            let value = phi_from_stats(&stats, sign, self.gamma);
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Violation {
                    group: g,
                    sign,
                    value,
                    stats,
                });
            }
        }
        Ok(best.expect("two signs"))
    }

    pub fn max_violation(&self, d: &MixedClassifier, oracle: &dyn CscOracle) -> Result<Violation> {
        self.max_violation_soft(&d.expected_predictions(), oracle)
    }

    /// Auditor best response: zero if no constraint is violated, otherwise
    /// the vertex with weight C on the most violated signed group.
    pub fn auditor_best_response_soft(&self, p: &[f64], oracle: &dyn CscOracle) -> Result<AuditorResponse> {
        let violation = self.max_violation_soft(p, oracle)?;
        let dual = if violation.value <= 0.0 {
            DualVector::zero(self.cap)
        } else {
            DualVector::vertex(violation.group.clone(), violation.sign, self.cap)
        };
        Ok(AuditorResponse { dual, violation })
    }

    pub fn auditor_best_response(&self, d: &MixedClassifier, oracle: &dyn CscOracle) -> Result<AuditorResponse> {
        self.auditor_best_response_soft(&d.expected_predictions(), oracle)
    }

    /// Dense payoff matrix over enumerated strategies.
    ///
    /// Rows follow `hypotheses`; column 0 is λ = 0, then for each group in
    /// order its `+` and `−` vertices with weight C.
    pub fn payoff_matrix(&self, hypotheses: &[LabelVector], groups: &[LabelVector]) -> Result<Vec<Vec<f64>>> {
        hypotheses
            .iter()
            .map(|h| {
                let p: Vec<f64> = h.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let err = error_rate(&p, self.data)?;
                let mut row = Vec::with_capacity(1 + 2 * groups.len());
                row.push(err);
                for g in groups {
                    for sign in Sign::BOTH {
                        row.push(err + self.cap * self.phi_soft(&p, g.bits(), sign)?);
                    }
                }
                Ok(row)
            })
            .collect()
    }
}

fn phi_from_stats(s: &GroupStats, sign: Sign, gamma: f64) -> f64 {
    sign.factor() * s.size * (s.base_rate - s.group_rate) - gamma
}
