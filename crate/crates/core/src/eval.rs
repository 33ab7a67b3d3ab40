//! Support recovery metrics against a gold-standard edge set.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::simulate::Edge;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts over all ordered pairs; with `include_diagonal = false` self-loops
/// are skipped. An estimated entry is positive iff it is exactly nonzero.
pub fn confusion(a_hat: &DMatrix<f64>, truth: &[Edge], include_diagonal: bool) -> ConfusionCounts {
    let truth: HashSet<Edge> = truth.iter().copied().collect();
    let mut c = ConfusionCounts::default();
    for j in 0..a_hat.ncols() {
        for i in 0..a_hat.nrows() {
            if i == j && !include_diagonal {
                continue;
            }
            match (a_hat[(i, j)] != 0.0, truth.contains(&(i, j))) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    c
}

/// Support of a matrix as a sorted edge list.
pub fn support(a: &DMatrix<f64>) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                edges.push((i, j));
            }
        }
    }
    edges
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fallout: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// A rate is absent when its denominator is zero.
pub fn rates(c: &ConfusionCounts) -> Rates {
    Rates {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        fallout: ratio(c.fp, c.fp + c.tn),
    }
}

/// Mean and standard error of the defined values of one rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub defined: usize,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = Option<f64>>>(values: I) -> Summary {
        let xs: Vec<f64> = values.into_iter().flatten().collect();
        let k = xs.len();
        if k == 0 {
            return Summary::default();
        }
        let mean = xs.iter().sum::<f64>() / k as f64;
        let std_err = (k > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        });
        Summary {
            mean: Some(mean),
            std_err,
            defined: k,
        }
    }
}

/// Replicate-averaged rates; each rate is averaged only where it is defined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub precision: Summary,
    pub recall: Summary,
    pub fallout: Summary,
    pub replicates: usize,
}

pub fn summarize(rates: &[Rates]) -> RateSummary {
    RateSummary {
        precision: Summary::of(rates.iter().map(|r| r.precision)),
        recall: Summary::of(rates.iter().map(|r| r.recall)),
        fallout: Summary::of(rates.iter().map(|r| r.fallout)),
        replicates: rates.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_support(p: usize, edges: &[Edge]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(p, p);
        for &(i, j) in edges {
            a[(i, j)] = 1.0;
        }
        a
    }

    #[test]
    fn two_node_enumeration() {
        let a = from_support(2, &[(0, 1), (1, 0)]);
        let c = confusion(&a, &[(0, 1)], true);
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, tn: 2, fn_: 0 });
        let r = rates(&c);
        assert_eq!(r.precision, Some(0.5));
        assert_eq!(r.recall, Some(1.0));
        assert!((r.fallout.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_estimate() {
        let c = confusion(&DMatrix::zeros(3, 3), &[(0, 1), (2, 2)], true);
        assert_eq!((c.tp, c.fp, c.fn_), (0, 0, 2));
        let r = rates(&c);
        assert_eq!(r.precision, None);
        assert_eq!(r.recall, Some(0.0));
    }

    #[test]
    fn undefined_denominators() {
        let r = rates(&ConfusionCounts { tp: 0, fp: 0, tn: 0, fn_: 0 });
        assert_eq!(r, Rates::default());
    }

    #[test]
    fn off_diagonal_mode() {
        let a = from_support(2, &[(0, 0), (0, 1)]);
        let c = confusion(&a, &[(0, 0)], false);
        assert_eq!(c, ConfusionCounts { tp: 0, fp: 1, tn: 1, fn_: 0 });
    }

    #[test]
    fn summary_skips_undefined() {
        let s = Summary::of([Some(1.0), None, Some(0.5)]);
        assert_eq!(s.mean, Some(0.75));
        assert_eq!(s.defined, 2);
        assert!((s.std_err.unwrap() - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn support_matches_itself(p in 1usize..6, bits in proptest::collection::vec(any::<bool>(), 36)) {
            let edges: Vec<Edge> = (0..p * p).filter(|&k| bits[k]).map(|k| (k / p, k % p)).collect();
            let a = from_support(p, &edges);
            let c = confusion(&a, &support(&a), true);
            prop_assert_eq!(c.fp, 0);
            prop_assert_eq!(c.fn_, 0);
            prop_assert_eq!(c.total(), p * p);
        }

        #[test]
        fn swapping_roles_swaps_errors(
            p in 1usize..6,
            x in proptest::collection::vec(any::<bool>(), 36),
            y in proptest::collection::vec(any::<bool>(), 36),
        ) {
            let ex: Vec<Edge> = (0..p * p).filter(|&k| x[k]).map(|k| (k / p, k % p)).collect();
            let ey: Vec<Edge> = (0..p * p).filter(|&k| y[k]).map(|k| (k / p, k % p)).collect();
            let c1 = confusion(&from_support(p, &ex), &ey, true);
            let c2 = confusion(&from_support(p, &ey), &ex, true);
            prop_assert_eq!((c1.tp, c1.tn), (c2.tp, c2.tn));
            prop_assert_eq!((c1.fp, c1.fn_), (c2.fn_, c2.fp));
            let r = rates(&c1);
            for v in [r.precision, r.recall, r.fallout].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
