//! Exact zero-sum matrix games by linear programming.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

/// Equilibrium of a matrix game whose row player minimizes.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution {
    pub row_mix: Vec<f64>,
    pub col_mix: Vec<f64>,
    pub value: f64,
    /// max_j (xA)_j − min_i (Ay)_i for the returned mixes.
    pub gap: f64,
}

/// Solves min_x max_y xᵀAy over the simplices with two LPs and certifies
/// the result by its exact duality gap.
pub fn solve_matrix_game(matrix: &[Vec<f64>], tol: f64) -> Result<MatrixGameSolution> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Input("empty payoff matrix".into()));
    }
    if let Some(bad) = matrix.iter().find(|r| r.len() != cols) {
        return Err(Error::Dimension {
            expected: cols,
            actual: bad.len(),
        });
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("payoff matrix has non-finite entries".into()));
    }

    let row_mix = simplex_strategy(rows, cols, |i, j| matrix[i][j], OptimizationDirection::Minimize)?;
    let col_mix = simplex_strategy(cols, rows, |j, i| matrix[i][j], OptimizationDirection::Maximize)?;

    let upper = (0..cols)
        .map(|j| (0..rows).map(|i| row_mix[i] * matrix[i][j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = (0..rows)
        .map(|i| (0..cols).map(|j| matrix[i][j] * col_mix[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let gap = upper - lower;
    if gap > tol {
        return Err(Error::NoConvergence { iterations: 1, gap });
    }
    Ok(MatrixGameSolution {
        row_mix,
        col_mix,
        value: 0.5 * (upper + lower),
        gap,
    })
}

/// Optimal mixed strategy over `k` pure strategies against `other`
/// responses, where `payoff(a, b)` is the payoff of own strategy `a` against
/// response `b`. Minimize guards against the worst (largest) response;
/// Maximize against the smallest.
fn simplex_strategy(
    k: usize,
    other: usize,
    payoff: impl Fn(usize, usize) -> f64,
    dir: OptimizationDirection,
) -> Result<Vec<f64>> {
    let mut lp = Problem::new(dir);
    let x: Vec<Variable> = (0..k).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let v = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let cmp = match dir {
        OptimizationDirection::Minimize => ComparisonOp::Le,
        OptimizationDirection::Maximize => ComparisonOp::Ge,
    };
    for b in 0..other {
        let mut expr: Vec<(Variable, f64)> = (0..k).map(|a| (x[a], payoff(a, b))).collect();
        expr.push((v, -1.0));
        lp.add_constraint(&expr, cmp, 0.0);
    }
    let ones: Vec<(Variable, f64)> = x.iter().map(|&xi| (xi, 1.0)).collect();
    lp.add_constraint(&ones, ComparisonOp::Eq, 1.0);
    let sol = lp.solve().map_err(|e| Error::Numerical {
        message: format!("matrix game LP failed: {e}"),
        condition: f64::INFINITY,
    })?;
    let mut mix: Vec<f64> = x.iter().map(|&xi| sol[xi].max(0.0)).collect();
    let total: f64 = mix.iter().sum();
    mix.iter_mut().for_each(|m| *m /= total);
    Ok(mix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies() {
        let s = solve_matrix_game(&[vec![1.0, -1.0], vec![-1.0, 1.0]], 1e-4).unwrap();
        assert!(s.value.abs() <= 1e-4);
        for p in s.row_mix.iter().chain(&s.col_mix) {
            assert!((p - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn one_by_one() {
        let s = solve_matrix_game(&[vec![0.37]], 1e-9).unwrap();
        assert_eq!(s.value, 0.37);
    }

    #[test]
    fn saddle_point_and_dominated_row() {
        // row 1 dominates row 0 for the minimizer; column 0 is the max of row 1
        let a = vec![vec![3.0, 4.0], vec![2.0, 1.0]];
        let s = solve_matrix_game(&a, 1e-9).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!((s.row_mix[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_by_two_mixed_equilibrium() {
        // value (ad − bc)/(a + d − b − c) for a game without a saddle point
        let a = vec![vec![2.0, -1.0], vec![-1.0, 1.0]];
        let s = solve_matrix_game(&a, 1e-9).unwrap();
        assert!((s.value - 0.2).abs() < 1e-9);
        assert!((s.row_mix[0] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(solve_matrix_game(&[], 1e-4).is_err());
        assert!(solve_matrix_game(&[vec![1.0], vec![1.0, 2.0]], 1e-4).is_err());
    }
}
