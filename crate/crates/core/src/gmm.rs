//! Two-component univariate Gaussian mixture fitted by EM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_EM_ITER: usize = 500;
pub const EM_TOL: f64 = 1e-8;
/// Component variances are floored at this fraction of the total variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1d {
    /// Component means, ascending.
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub proportions: [f64; 2],
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl GaussianMixture1d {
    fn log_densities(&self, x: f64) -> [f64; 2] {
        std::array::from_fn(|k| {
            let var = self.variances[k];
            let d = x - self.means[k];
            self.proportions[k].ln() - 0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * d * d / var
        })
    }

    /// Posterior probability of each component for `x`.
    pub fn responsibilities(&self, x: f64) -> [f64; 2] {
        let l = self.log_densities(x);
        let m = l[0].max(l[1]);
        let e = [(l[0] - m).exp(), (l[1] - m).exp()];
        let z = e[0] + e[1];
        [e[0] / z, e[1] / z]
    }

    /// Maximum-posterior component; ties go to component 0.
    pub fn classify(&self, x: f64) -> usize {
        let r = self.responsibilities(x);
        usize::from(r[1] > r[0])
    }

    fn log_likelihood_of(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&x| {
                let l = self.log_densities(x);
                let m = l[0].max(l[1]);
                m + ((l[0] - m).exp() + (l[1] - m).exp()).ln()
            })
            .sum()
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Splits sorted values into a lower and upper group with 2-means, started
/// from the cut at the widest gap. Returns the number of values in the lower
/// group.
fn two_means_split(sorted: &[f64], seed: u64) -> usize {
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let widest = gaps.iter().copied().fold(0.0f64, f64::max);
    let candidates: Vec<usize> = (0..gaps.len()).filter(|&i| gaps[i] == widest).collect();
    let mut cut = candidates[(seed % candidates.len() as u64) as usize] + 1;

    // Lloyd iterations on a sorted line move the cut monotonically to a fixed point
    for _ in 0..sorted.len() {
        let lo = sorted[..cut].iter().sum::<f64>() / cut as f64;
        let hi = sorted[cut..].iter().sum::<f64>() / (sorted.len() - cut) as f64;
        let mid = 0.5 * (lo + hi);
        let next = sorted.partition_point(|&x| x <= mid).clamp(1, sorted.len() - 1);
        if next == cut {
            break;
        }
        cut = next;
    }
    cut
}

/// Fits the mixture and labels each value by its maximum-posterior component.
///
/// Component 0 has the smaller mean. The initial partition comes from 2-means
/// seeded at the widest gap between sorted values; `seed` only breaks ties
/// between equally wide gaps.
pub fn fit_gmm_1d(values: &[f64], seed: u64) -> Result<(Vec<usize>, GaussianMixture1d)> {
    if values.len() < 2 {
        return Err(Error::Dimension(format!(
            "mixture needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Dimension("mixture values must be finite".into()));
    }
    let (_, total_var) = mean_var(values);
    if total_var == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let floor = VARIANCE_FLOOR * total_var;

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = two_means_split(&sorted, seed);
    let (m0, v0) = mean_var(&sorted[..cut]);
    let (m1, v1) = mean_var(&sorted[cut..]);
    let n = values.len() as f64;
    let mut model = GaussianMixture1d {
        means: [m0, m1],
        variances: [v0.max(floor), v1.max(floor)],
        proportions: [cut as f64 / n, 1.0 - cut as f64 / n],
        log_likelihood: f64::NEG_INFINITY,
        iterations: 0,
    };
    model.log_likelihood = model.log_likelihood_of(values);

    for it in 1..=MAX_EM_ITER {
        let resp: Vec<[f64; 2]> = values.iter().map(|&x| model.responsibilities(x)).collect();
        let mut next = model.clone();
        for k in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[k]).sum();
            if nk <= f64::MIN_POSITIVE {
                // empty component: keep its previous location and shape
                next.proportions[k] = 0.0;
                continue;
            }
            let mean = resp.iter().zip(values).map(|(r, x)| r[k] * x).sum::<f64>() / nk;
            let var = resp
                .iter()
                .zip(values)
                .map(|(r, x)| r[k] * (x - mean) * (x - mean))
                .sum::<f64>()
                / nk;
            next.means[k] = mean;
            next.variances[k] = var.max(floor);
            next.proportions[k] = nk / n;
        }
        if next.proportions.contains(&0.0) {
            // a vanished component would make the density undefined
            break;
        }
        next.log_likelihood = next.log_likelihood_of(values);
        next.iterations = it;
        let gain = next.log_likelihood - model.log_likelihood;
        model = next;
        if gain < EM_TOL {
            break;
        }
    }

    if model.means[0] > model.means[1] {
        model.means.swap(0, 1);
        model.variances.swap(0, 1);
        model.proportions.swap(0, 1);
    }
    let labels = values.iter().map(|&x| model.classify(x)).collect();
    Ok((labels, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn same_partition(labels: &[usize], expected: &[usize]) -> bool {
        let flip: Vec<usize> = expected.iter().map(|l| 1 - l).collect();
        labels == expected || labels == flip.as_slice()
    }

    #[test]
    fn well_separated_clusters() {
        let (labels, fit) = fit_gmm_1d(&[10.1, 9.8, 0.1, 0.2, 0.15], 0).unwrap();
        assert!(same_partition(&labels, &[1, 1, 0, 0, 0]));
        assert!((fit.means[1] - 9.95).abs() < 1e-6);
        assert!((fit.proportions[0] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn zero_variance_component_is_floored() {
        let values = [5.0, 5.0, 0.1, 0.2];
        let (labels, fit) = fit_gmm_1d(&values, 0).unwrap();
        assert!(same_partition(&labels, &[1, 1, 0, 0]));
        let (_, total) = mean_var(&values);
        assert!((fit.variances[1] - VARIANCE_FLOOR * total).abs() < 1e-15);
    }

    #[test]
    fn all_equal_is_degenerate() {
        assert_eq!(fit_gmm_1d(&[2.0, 2.0, 2.0], 7), Err(Error::DegenerateInput));
        assert!(matches!(fit_gmm_1d(&[1.0], 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let values = [0.3, 1.2, 0.1, 4.0, 3.9, 0.25, 0.0, 4.4, 1.0];
        let a = fit_gmm_1d(&values, 3).unwrap();
        let b = fit_gmm_1d(&values, 3).unwrap();
        assert_eq!(a, b);
    }
}
