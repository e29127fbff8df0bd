//! Shared fixtures for integration tests.
#![allow(dead_code)]

use gerryfair::data::Dataset;
use gerryfair::labels::LabelVector;
use gerryfair::metrics::Notion;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small enumerated game: binary features, random truth-table hypotheses
/// and groups.
pub struct Synthetic {
    pub data: Dataset,
    pub hypotheses: Vec<LabelVector>,
    pub groups: Vec<LabelVector>,
    pub notion: Notion,
    pub gamma: f64,
}

pub const PROTECTED_BITS: usize = 3;
pub const EXTRA_BITS: usize = 2;

fn bits_of(row: &[f64]) -> usize {
    row.iter().enumerate().map(|(j, &v)| (v as usize) << j).sum()
}

/// Labels every row by a random truth table over the given columns.
fn truth_table(x: &DMatrix<f64>, cols: usize, rng: &mut ChaCha8Rng) -> LabelVector {
    let table: Vec<bool> = (0..1usize << cols).map(|_| rng.gen()).collect();
    LabelVector::explicit(
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = (0..cols).map(|j| x[(i, j)]).collect();
                table[bits_of(&row)]
            })
            .collect(),
    )
}

/// n = 30 rows; |H| = 64 (62 random plus both constants); |G| = 16
/// (8 random groups over the protected bits and their negations).
pub fn synthetic(seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 30;
    let d = PROTECTED_BITS + EXTRA_BITS;
    let x = DMatrix::from_fn(n, d, |_, _| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    // labels correlate with a protected bit so that accuracy and fairness conflict
    let y: Vec<bool> = (0..n)
        .map(|i| {
            let signal = x[(i, 0)] == 1.0 || x[(i, PROTECTED_BITS)] == 1.0;
            signal != rng.gen_bool(0.15)
        })
        .collect();
    let y = if y.iter().all(|&b| b) {
        let mut y = y;
        y[0] = false;
        y
    } else {
        y
    };
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let data = Dataset::new(x.clone(), names, (0..PROTECTED_BITS).collect(), y, None).unwrap();

    let mut hypotheses = vec![LabelVector::constant(n, false), LabelVector::constant(n, true)];
    while hypotheses.len() < 64 {
        hypotheses.push(truth_table(&x, d, &mut rng));
    }
    let mut groups = Vec::new();
    for _ in 0..8 {
        let g = truth_table(&x, PROTECTED_BITS, &mut rng);
        groups.push(g.complement());
        groups.push(g);
    }
    Synthetic {
        data,
        hypotheses,
        groups,
        notion: if seed.is_multiple_of(2) { Notion::Fp } else { Notion::Sp },
        gamma: 0.01,
    }
}
