//! Cost-sensitive classification (CSC) oracles.
//!
//! Given per-row costs `c0_i` (predict 0) and `c1_i` (predict 1), an oracle
//! returns a labelling from its family minimizing Σ_i h_i·c1_i + (1−h_i)·c0_i.
//! [`ExhaustiveOracle`] is exact over an enumerable family;
//! [`RegressionOracle`] is the two-stage least-squares heuristic over linear
//! thresholds and carries no optimality guarantee.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::labels::{LabelVector, Literal, Provenance};
use crate::metrics::check_len;

/// Ridge added to the normal equations of the regression oracle.
pub const RIDGE: f64 = 1e-6;

/// Largest literal universe the conjunction family will enumerate.
pub const MAX_LITERALS: usize = 20;

/// Costs for labelling each row 0 or 1, over a caller-chosen feature matrix.
#[derive(Clone, Debug)]
pub struct CscInstance<'a> {
    pub features: &'a DMatrix<f64>,
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
}

impl<'a> CscInstance<'a> {
    pub fn new(features: &'a DMatrix<f64>, c0: Vec<f64>, c1: Vec<f64>) -> Result<Self> {
        check_len(features.nrows(), c0.len())?;
        check_len(features.nrows(), c1.len())?;
        if c0.iter().chain(&c1).any(|c| !c.is_finite()) {
            return Err(Error::Input("CSC costs must be finite".into()));
        }
        Ok(Self { features, c0, c1 })
    }

    /// Instance in normal form: zero cost for predicting 0.
    pub fn normal_form(features: &'a DMatrix<f64>, c1: Vec<f64>) -> Result<Self> {
        Self::new(features, vec![0.0; features.nrows()], c1)
    }

    pub fn len(&self) -> usize {
        self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c0.is_empty()
    }

    /// Total cost of labelling `h`.
    pub fn cost(&self, h: &[bool]) -> f64 {
        h.iter()
            .zip(self.c0.iter().zip(&self.c1))
            .map(|(&b, (c0, c1))| if b { *c1 } else { *c0 })
            .sum()
    }

    /// Debug dump: columns c0, c1, then the selected feature columns.
    pub fn write_csv<W: Write>(&self, out: W, columns: &[usize]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["c0".to_string(), "c1".to_string()];
        header.extend(columns.iter().map(|c| format!("x{c}")));
        w.write_record(&header).map_err(std::io::Error::other)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:.17e}", self.c0[i]), format!("{:.17e}", self.c1[i])];
            row.extend(columns.iter().map(|&c| format!("{:.17e}", self.features[(i, c)])));
            w.write_record(&row).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Adds `shift[i]` to both costs of row i; the argmin is unchanged.
pub fn translate_costs<'a>(inst: &CscInstance<'a>, shift: &[f64]) -> Result<CscInstance<'a>> {
    check_len(inst.len(), shift.len())?;
    CscInstance::new(
        inst.features,
        inst.c0.iter().zip(shift).map(|(c, a)| c + a).collect(),
        inst.c1.iter().zip(shift).map(|(c, a)| c + a).collect(),
    )
}

/// A hypothesis (or group) class over a dataset's rows.
#[derive(Clone, Debug)]
pub enum HypothesisFamily {
    Enumerated(Vec<LabelVector>),
    /// Linear thresholds over the given feature columns.
    LinearThreshold {
        columns: Vec<usize>,
    },
    /// Every conjunction over a literal universe, plus every complement.
    Conjunctions {
        literals: Vec<Literal>,
    },
}

impl HypothesisFamily {
    /// Conjunction family with one threshold per column and both polarities.
    ///
    /// Columns taking only the values 0 and 1 are split at 0.5, any other
    /// column at its median.
    pub fn conjunctions_over(features: &DMatrix<f64>, columns: &[usize]) -> Self {
        let mut literals = Vec::with_capacity(2 * columns.len());
        for &c in columns {
            let col: Vec<f64> = features.column(c).iter().copied().collect();
            let threshold = if col.iter().all(|&v| v == 0.0 || v == 1.0) {
                0.5
            } else {
                let mut s = col.clone();
                s.sort_by(f64::total_cmp);
                let m = s.len();
                if m % 2 == 1 {
                    s[m / 2]
                } else {
                    0.5 * (s[m / 2 - 1] + s[m / 2])
                }
            };
            for positive in [true, false] {
                literals.push(Literal {
                    column: c,
                    threshold,
                    positive,
                });
            }
        }
        HypothesisFamily::Conjunctions { literals }
    }

    /// Lists the family's labellings on `features`, deduplicated (first
    /// occurrence kept) and with both constants present.
    ///
    /// Conjunctions come first in subset-mask order, then their complements.
    pub fn materialize(&self, features: &DMatrix<f64>) -> Result<Vec<LabelVector>> {
        let n = features.nrows();
        let raw: Vec<LabelVector> = match self {
            HypothesisFamily::Enumerated(list) => {
                if list.is_empty() {
                    return Err(Error::Input("enumerated family is empty".into()));
                }
                for h in list {
                    check_len(n, h.len())?;
                }
                list.clone()
            }
            HypothesisFamily::LinearThreshold { .. } => {
                return Err(Error::Input(
                    "linear-threshold families cannot be enumerated; use the regression oracle".into(),
                ))
            }
            HypothesisFamily::Conjunctions { literals } => {
                if literals.len() > MAX_LITERALS {
                    return Err(Error::Input(format!(
                        "{} literals exceed the enumeration limit of {MAX_LITERALS}",
                        literals.len()
                    )));
                }
                let mut out = Vec::with_capacity(2 << literals.len());
                for mask in 0u32..(1u32 << literals.len()) {
                    let chosen = literals
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| mask & (1 << j) != 0)
                        .map(|(_, l)| l.clone())
                        .collect();
                    out.push(LabelVector::generate(
                        Provenance::Conjunction {
                            literals: chosen,
                            negated: false,
                        },
                        features,
                    )?);
                }
                let negations: Vec<LabelVector> = out.iter().map(LabelVector::complement).collect();
                out.extend(negations);
                out
            }
        };
        let mut seen: HashSet<Vec<bool>> = HashSet::new();
        let mut members: Vec<LabelVector> = raw.into_iter().filter(|h| seen.insert(h.bits().to_vec())).collect();
        for value in [false, true] {
            if !seen.contains(&vec![value; n]) {
                seen.insert(vec![value; n]);
                members.push(LabelVector::constant(n, value));
            }
        }
        Ok(members)
    }
}

/// True when every member's complement is also a member.
pub fn is_closed_under_negation(members: &[LabelVector]) -> bool {
    let set: HashSet<&[bool]> = members.iter().map(|h| h.bits()).collect();
    members.iter().all(|h| {
        let neg: Vec<bool> = h.bits().iter().map(|b| !b).collect();
        set.contains(neg.as_slice())
    })
}

/// A CSC solver bound to one hypothesis family.
pub trait CscOracle: Send + Sync {
    fn solve(&self, inst: &CscInstance<'_>) -> Result<LabelVector>;

    /// Whether `solve` is guaranteed to return a true minimizer.
    fn is_exact(&self) -> bool;
}

/// Index of the cheapest member; earliest member wins ties.
pub fn argmin_member(inst: &CscInstance<'_>, members: &[LabelVector]) -> Result<usize> {
    if members.is_empty() {
        return Err(Error::Input("empty family".into()));
    }
    // Σ_{h_i = 1} (c1_i − c0_i) orders members exactly as the full cost does.
    let diff: Vec<f64> = inst.c1.iter().zip(&inst.c0).map(|(a, b)| a - b).collect();
    let mut best = (0usize, f64::INFINITY);
    for (j, h) in members.iter().enumerate() {
        check_len(inst.len(), h.len())?;
        let cost: f64 = h.bits().iter().zip(&diff).filter(|(&b, _)| b).map(|(_, d)| d).sum();
        if cost < best.1 {
            best = (j, cost);
        }
    }
    Ok(best.0)
}

/// Exhaustive minimization over an enumerated family.
pub fn solve_exhaustive(inst: &CscInstance<'_>, members: &[LabelVector]) -> Result<LabelVector> {
    Ok(members[argmin_member(inst, members)?].clone())
}

#[derive(Clone, Debug)]
pub struct ExhaustiveOracle {
    members: Vec<LabelVector>,
}

impl ExhaustiveOracle {
    pub fn new(family: &HypothesisFamily, features: &DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            members: family.materialize(features)?,
        })
    }

    /// Uses `members` verbatim, in the given order.
    pub fn from_members(members: Vec<LabelVector>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Input("empty family".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[LabelVector] {
        &self.members
    }
}

impl CscOracle for ExhaustiveOracle {
    fn solve(&self, inst: &CscInstance<'_>) -> Result<LabelVector> {
        solve_exhaustive(inst, &self.members)
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Two-stage regression heuristic over linear thresholds.
///
/// Fits `r0 ≈ c0` and `r1 ≈ c1` by ridge least squares with an intercept
/// and labels a row 1 iff `r1(x) < r0(x)`. The normal matrix depends only
/// on the features, so it is factored once at construction.
pub struct RegressionOracle {
    columns: Vec<usize>,
    design: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    features: DMatrix<f64>,
}

impl std::fmt::Debug for RegressionOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegressionOracle")
            .field("columns", &self.columns)
            .field("rows", &self.design.nrows())
            .finish()
    }
}

impl RegressionOracle {
    pub fn new(features: &DMatrix<f64>, columns: Vec<usize>) -> Result<Self> {
        let n = features.nrows();
        let k = columns.len();
        if let Some(&bad) = columns.iter().find(|&&c| c >= features.ncols()) {
            return Err(Error::Input(format!("column {bad} out of range")));
        }
        let mut design = DMatrix::<f64>::zeros(n, k + 1);
        for (j, &c) in columns.iter().enumerate() {
            design.set_column(j, &features.column(c));
        }
        design.column_mut(k).fill(1.0);
        let mut gram = design.tr_mul(&design);
        for d in 0..=k {
            gram[(d, d)] += RIDGE;
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: "feature magnitudes overflow the normal equations".into(),
                condition: f64::INFINITY,
            });
        }
        let factor = Cholesky::new(gram.clone()).ok_or_else(|| {
            let eig = gram.clone().symmetric_eigenvalues();
            let max = eig.iter().copied().fold(f64::MIN, f64::max);
            let min = eig.iter().copied().fold(f64::MAX, f64::min);
            Error::Numerical {
                message: "normal equations are not positive definite".into(),
                condition: if min > 0.0 { max / min } else { f64::INFINITY },
            }
        })?;
        Ok(Self {
            columns,
            design,
            factor,
            features: features.clone(),
        })
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Ridge coefficients (feature weights, then intercept) for `target`.
    pub fn fit(&self, target: &[f64]) -> Result<DVector<f64>> {
        check_len(self.design.nrows(), target.len())?;
        let rhs = self.design.tr_mul(&DVector::from_column_slice(target));
        let coef = self.factor.solve(&rhs);
        if coef.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical {
                message: "regression produced non-finite coefficients".into(),
                condition: f64::INFINITY,
            });
        }
        Ok(coef)
    }

    /// Fitted values of `r1 − r0` on every row.
    pub fn fitted_difference(&self, inst: &CscInstance<'_>) -> Result<Vec<f64>> {
        let d = self.fit(&inst.c1)? - self.fit(&inst.c0)?;
        Ok((&self.design * d).iter().copied().collect())
    }
}

impl CscOracle for RegressionOracle {
    fn solve(&self, inst: &CscInstance<'_>) -> Result<LabelVector> {
        check_len(self.design.nrows(), inst.len())?;
        let k = self.columns.len();
        let diff = self.fit(&inst.c0)? - self.fit(&inst.c1)?;
        let prov = Provenance::Linear {
            columns: self.columns.clone(),
            weights: diff.rows(0, k).iter().copied().collect(),
            threshold: -diff[k],
            negated: false,
        };
        LabelVector::generate(prov, &self.features)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// One-shot regression solve over linear thresholds on `columns`.
pub fn solve_regression(inst: &CscInstance<'_>, columns: &[usize]) -> Result<LabelVector> {
    RegressionOracle::new(inst.features, columns.to_vec())?.solve(inst)
}
