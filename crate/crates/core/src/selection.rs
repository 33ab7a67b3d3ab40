//! Penalty grids, information criteria and warm-started regularization paths.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::EmpiricalMoments;
use crate::penalty::{resolve_pattern, NodeClassification, PenaltyMatrix, PenaltySpec};
use crate::solver::{solve_network, ActiveSetState, NetworkEstimate, SolverOptions};

pub const DEFAULT_GRID_SIZE: usize = 50;
/// Last grid point as a fraction of the first.
pub const DEFAULT_TERMINAL_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Aic,
}

impl Criterion {
    pub fn score(&self, est: &NetworkEstimate) -> f64 {
        match self {
            Criterion::Bic => est.bic,
            Criterion::Aic => est.aic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(Criterion::Bic),
            "aic" => Ok(Criterion::Aic),
            other => Err(Error::InvalidPenalty(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Smallest global level at which every coefficient is zero, for a penalty
/// pattern given at `rho = 1`.
pub fn rho_max(m: &EmpiricalMoments, base: &DMatrix<f64>) -> Result<f64> {
    if base.shape() != (m.p, m.p) {
        return Err(Error::Dimension(format!("penalty pattern is {:?}", base.shape())));
    }
    let mut best: Option<f64> = None;
    for (w, v) in base.iter().zip(m.v.iter()) {
        if w.is_infinite() {
            continue;
        }
        let r = if *w > 0.0 {
            v.abs() / w
        } else if *v != 0.0 {
            // an unpenalized coefficient with signal is never zero
            f64::INFINITY
        } else {
            0.0
        };
        best = Some(best.map_or(r, |b: f64| b.max(r)));
    }
    best.ok_or(Error::AllInfinitePenalties)
}

/// `size` log-spaced levels from `rho_max` down to `rho_max * decay^(size-1)`.
pub fn make_grid(rho_max: f64, size: usize, decay: f64) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::Dimension(format!("grid needs at least 2 points, got {size}")));
    }
    if !(decay > 0.0 && decay < 1.0) || !(rho_max > 0.0) || !rho_max.is_finite() {
        return Err(Error::InvalidPenalty(format!(
            "grid from {rho_max} with decay {decay}"
        )));
    }
    Ok((0..size).map(|k| rho_max * decay.powi(k as i32)).collect())
}

/// Decay factor that ends a grid of `size` points at `terminal_ratio * rho_max`.
pub fn decay_for(size: usize, terminal_ratio: f64) -> f64 {
    terminal_ratio.powf(1.0 / (size.max(2) - 1) as f64)
}

/// `n * [tr(V'A) - tr(A'SA)/2]`, the profile log-likelihood up to constants.
fn fit_term(m: &EmpiricalMoments, a: &DMatrix<f64>) -> f64 {
    let tr_va = m.v.dot(a);
    let sa = &m.s * a;
    let tr_asa = a.dot(&sa);
    m.n as f64 * (tr_va - 0.5 * tr_asa)
}

/// Relative score; larger is better.
pub fn bic(m: &EmpiricalMoments, est: &NetworkEstimate) -> f64 {
    fit_term(m, &est.a_hat) - 0.5 * (m.n as f64).ln() * est.df as f64
}

/// Relative score; larger is better.
pub fn aic(m: &EmpiricalMoments, est: &NetworkEstimate) -> f64 {
    fit_term(m, &est.a_hat) - est.df as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GridExhausted,
    /// Some column reached `min(n, p)` active coefficients, or could not add
    /// another without a singular active block.
    ColumnCapacityReached,
    /// The solver failed; the error is kept on the path.
    SolverFailure,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::GridExhausted => "grid_exhausted",
            StopReason::ColumnCapacityReached => "column_capacity_reached",
            StopReason::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyPath {
    /// The full requested grid; `estimates` may cover only a prefix of it.
    pub grid: Vec<f64>,
    pub estimates: Vec<NetworkEstimate>,
    pub stop_reason: StopReason,
    pub failure: Option<Error>,
    pub classes: Option<NodeClassification>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Dimension("empty penalty grid".into()));
    }
    if grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidPenalty("grid levels must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidPenalty("grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Solves along a decreasing grid, each point warm-started from the last.
///
/// `spec.rho` is ignored; the levels come from `grid`.
pub fn solve_path(
    m: &EmpiricalMoments,
    spec: &PenaltySpec,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<PenaltyPath> {
    check_grid(grid)?;
    let (base, classes) = resolve_pattern(spec, m.p)?;
    Ok(solve_path_with_pattern(m, &base, grid, opts, classes))
}

/// Resolves the penalty, builds the default grid from its `rho_max` and
/// solves the path.
pub fn auto_path(
    m: &EmpiricalMoments,
    spec: &PenaltySpec,
    size: usize,
    terminal_ratio: f64,
    opts: &SolverOptions,
) -> Result<PenaltyPath> {
    let (base, classes) = resolve_pattern(spec, m.p)?;
    let top = rho_max(m, &base)?;
    let grid = make_grid(top, size, decay_for(size, terminal_ratio))?;
    Ok(solve_path_with_pattern(m, &base, &grid, opts, classes))
}

fn solve_path_with_pattern(
    m: &EmpiricalMoments,
    base: &DMatrix<f64>,
    grid: &[f64],
    opts: &SolverOptions,
    classes: Option<NodeClassification>,
) -> PenaltyPath {
    let pattern = PenaltyMatrix {
        weights: base.clone(),
        rho: 1.0,
    };
    let capacity = m.capacity();
    let mut estimates = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<ActiveSetState>> = None;
    let mut stop_reason = StopReason::GridExhausted;
    let mut failure = None;

    for &rho in grid {
        let penalty = pattern.rescaled(rho);
        match solve_network(m, &penalty, warm.as_deref(), opts) {
            Ok(sol) => {
                let full = sol.estimate.column_counts().iter().any(|&c| c >= capacity);
                estimates.push(sol.estimate);
                warm = Some(sol.states);
                if full {
                    stop_reason = StopReason::ColumnCapacityReached;
                    break;
                }
            }
            Err(e) => {
                stop_reason = match e.root() {
                    Error::SingularActiveBlock { .. } => StopReason::ColumnCapacityReached,
                    _ => StopReason::SolverFailure,
                };
                log::debug!("path stopped at rho = {rho}: {e}");
                failure = Some(e);
                break;
            }
        }
    }
    PenaltyPath {
        grid: grid.to_vec(),
        estimates,
        stop_reason,
        failure,
        classes,
    }
}

/// Index of the best-scoring estimate; ties go to the larger penalty.
pub fn select_best_index(estimates: &[NetworkEstimate], criterion: Criterion) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, est) in estimates.iter().enumerate() {
        let score = criterion.score(est);
        if best.is_none_or(|b| score > criterion.score(&estimates[b])) {
            best = Some(k);
        }
    }
    best
}

pub fn select_best(path: &PenaltyPath, criterion: Criterion) -> Result<&NetworkEstimate> {
    select_best_index(&path.estimates, criterion)
        .map(|k| &path.estimates[k])
        .ok_or(Error::EmptyPath)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn moments_1d(v: f64) -> EmpiricalMoments {
        EmpiricalMoments::from_parts(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, v),
            10,
        )
        .unwrap()
    }

    fn scored(bic: f64, aic: f64, rho: f64) -> NetworkEstimate {
        NetworkEstimate {
            a_hat: DMatrix::zeros(1, 1),
            rho,
            df: 0,
            bic,
            aic,
        }
    }

    #[test]
    fn rho_max_examples() {
        let m = moments_1d(0.9);
        assert_abs_diff_eq!(rho_max(&m, &DMatrix::from_element(1, 1, 1.0)).unwrap(), 0.9);
        let m = EmpiricalMoments::from_parts(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[0.1, -0.9, 0.3, 0.0]),
            5,
        )
        .unwrap();
        assert_abs_diff_eq!(rho_max(&m, &DMatrix::from_element(2, 2, 2.0)).unwrap(), 0.45);
        assert_eq!(
            rho_max(&m, &DMatrix::from_element(2, 2, f64::INFINITY)),
            Err(Error::AllInfinitePenalties)
        );
    }

    #[test]
    fn grid_spacing() {
        let g = make_grid(1.0, 3, decay_for(3, 0.01)).unwrap();
        assert_abs_diff_eq!(g[0], 1.0);
        assert_abs_diff_eq!(g[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], 0.01, epsilon = 1e-15);
        let g = make_grid(2.0, 2, 0.5).unwrap();
        assert_eq!(g, vec![2.0, 1.0]);
        let g = make_grid(3.0, DEFAULT_GRID_SIZE, decay_for(DEFAULT_GRID_SIZE, 0.01)).unwrap();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert_abs_diff_eq!(g[49], 0.03, epsilon = 1e-12);
        assert!(make_grid(1.0, 1, 0.5).is_err());
    }

    #[test]
    fn criteria_vanish_on_null_model() {
        let m = moments_1d(0.5);
        let est = NetworkEstimate::from_matrix(&m, DMatrix::zeros(1, 1), 1.0);
        assert_eq!(est.bic, 0.0);
        assert_eq!(est.aic, 0.0);
    }

    #[test]
    fn criteria_by_hand() {
        // S = [[1, .5], [.5, 2]], V = [[.4, 0], [.2, .1]], A = [[.3, 0], [0, 0]], n = 10
        let m = EmpiricalMoments::from_parts(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]),
            DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.2, 0.1]),
            10,
        )
        .unwrap();
        let est = NetworkEstimate::from_matrix(
            &m,
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.0]),
            1.0,
        );
        // tr(V'A) = 0.12, tr(A'SA) = 0.09 -> bracket 0.075, times n = 0.75
        assert_eq!(est.df, 1);
        assert_abs_diff_eq!(est.bic, 0.75 - 0.5 * 10f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(est.aic, 0.75 - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn bic_linear_in_df() {
        let m = EmpiricalMoments::from_parts(DMatrix::identity(3, 3), DMatrix::zeros(3, 3), 10).unwrap();
        let mk = |df| NetworkEstimate {
            a_hat: DMatrix::zeros(3, 3),
            rho: 1.0,
            df,
            bic: 0.0,
            aic: 0.0,
        };
        assert_abs_diff_eq!(bic(&m, &mk(3)) - bic(&m, &mk(5)), 10f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn argmax_with_tie_toward_larger_rho() {
        let ests = vec![scored(0.0, 0.0, 3.0), scored(5.0, 1.0, 2.0), scored(3.0, 2.0, 1.0)];
        assert_eq!(select_best_index(&ests, Criterion::Bic), Some(1));
        assert_eq!(select_best_index(&ests, Criterion::Aic), Some(2));
        let ests = vec![scored(4.0, 0.0, 2.0), scored(4.0, 0.0, 1.0)];
        assert_eq!(select_best_index(&ests, Criterion::Bic), Some(0));
        assert_eq!(select_best_index(&[], Criterion::Bic), None);
    }

    #[test]
    fn singleton_grid_above_rho_max() {
        let m = moments_1d(0.9);
        let path = solve_path(&m, &PenaltySpec::lasso(1.0), &[1.8], &SolverOptions::default()).unwrap();
        assert_eq!(path.estimates.len(), 1);
        assert_eq!(path.estimates[0].df, 0);
        assert_eq!(path.stop_reason, StopReason::GridExhausted);
    }

    #[test]
    fn grid_validation() {
        let m = moments_1d(0.9);
        let opts = SolverOptions::default();
        assert!(solve_path(&m, &PenaltySpec::lasso(1.0), &[1.0, 1.0], &opts).is_err());
        assert!(solve_path(&m, &PenaltySpec::lasso(1.0), &[], &opts).is_err());
        assert!(solve_path(&m, &PenaltySpec::lasso(1.0), &[1.0, -1.0], &opts).is_err());
    }
}
