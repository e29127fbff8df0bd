//! Error/unfairness Pareto frontiers.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub error: f64,
    pub unfairness: f64,
    /// The γ whose run produced the point.
    pub gamma: f64,
    pub t: usize,
}

/// The points not dominated in (error, unfairness), sorted by increasing
/// error. Exact duplicates keep their first occurrence.
pub fn pareto_frontier(points: &[FrontierPoint]) -> Vec<FrontierPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        p.error
            .total_cmp(&q.error)
            .then(p.unfairness.total_cmp(&q.unfairness))
            .then(a.cmp(&b))
    });
    let mut out: Vec<FrontierPoint> = Vec::new();
    for i in order {
        let p = points[i];
        if out.last().is_none_or(|last| p.unfairness < last.unfairness) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(error: f64, unfairness: f64) -> FrontierPoint {
        FrontierPoint {
            error,
            unfairness,
            gamma: 0.0,
            t: 0,
        }
    }

    #[test]
    fn drops_dominated_points() {
        let f = pareto_frontier(&[
            pt(0.3, 0.0),
            pt(0.2, 0.01),
            pt(0.25, 0.02),
            pt(0.1, 0.03),
            pt(0.1, 0.05),
        ]);
        assert_eq!(f, vec![pt(0.1, 0.03), pt(0.2, 0.01), pt(0.3, 0.0)]);
        assert!(pareto_frontier(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn frontier_is_sorted_and_undominated(raw in proptest::collection::vec((0u8..20, 0u8..20), 0..40)) {
            let pts: Vec<_> = raw.iter().map(|&(e, u)| pt(e as f64 / 20.0, u as f64 / 20.0)).collect();
            let f = pareto_frontier(&pts);
            for w in f.windows(2) {
                prop_assert!(w[0].error < w[1].error && w[0].unfairness > w[1].unfairness);
            }
            for p in &pts {
                prop_assert!(f.iter().any(|q| q.error <= p.error && q.unfairness <= p.unfairness));
            }
        }
    }
}
