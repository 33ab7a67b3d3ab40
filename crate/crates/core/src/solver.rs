//! Active-set solver for the column-wise weighted-Lasso problem
//!
//! ```text
//! L(b) = 1/2 b'Sb - b'v + sum_i lambda_i |b_i|
//! ```
//!
//! The method keeps a small set of nonzero coefficients, solves the smooth
//! problem restricted to that set with the signs frozen, shortens the step
//! whenever a coefficient would cross zero, and grows the set with the
//! coordinate whose optimality violation is largest. Entries with an infinite
//! weight are locked at zero and never enter the active set.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::EmpiricalMoments;
use crate::penalty::PenaltyMatrix;
use crate::selection;

/// Magnitude below which a coefficient is considered vanished after a step.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Default optimality tolerance on the subgradient.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Smallest admissible squared Cholesky pivot relative to the block diagonal.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-10;

/// One column subproblem: `s` is shared across columns, `v` is a column of
/// the lag-one covariance and `lambda` the matching column of penalties.
#[derive(Debug, Clone)]
pub struct ColumnProblem<'a> {
    pub s: &'a DMatrix<f64>,
    pub v: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl<'a> ColumnProblem<'a> {
    pub fn new(s: &'a DMatrix<f64>, v: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let p = s.nrows();
        if s.ncols() != p || v.len() != p || lambda.len() != p {
            return Err(Error::Dimension(format!(
                "S is {:?}, v has {} entries, lambda has {}",
                s.shape(),
                v.len(),
                lambda.len()
            )));
        }
        if let Some(bad) = lambda.iter().find(|l| !(**l >= 0.0)) {
            return Err(Error::InvalidPenalty(format!("penalty weight {bad}")));
        }
        Ok(ColumnProblem { s, v, lambda })
    }

    pub fn p(&self) -> usize {
        self.v.len()
    }

    /// `S b - v`.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let p = self.p();
        let mut g: Vec<f64> = self.v.iter().map(|x| -x).collect();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (i, gi) in g.iter_mut().enumerate().take(p) {
                    *gi += self.s[(i, j)] * b;
                }
            }
        }
        g
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        let g = self.gradient(beta);
        // 1/2 b'Sb - b'v = 1/2 b'(Sb - v) - 1/2 b'v
        let mut val = 0.0;
        for i in 0..self.p() {
            if beta[i] != 0.0 {
                val += 0.5 * beta[i] * (g[i] - self.v[i]) + self.lambda[i] * beta[i].abs();
            }
        }
        val
    }
}

/// Iterate of the active-set method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetState {
    pub beta: Vec<f64>,
    /// Indices with nonzero coefficient, ascending.
    pub active: Vec<usize>,
    /// Sign of each active coefficient; zero elsewhere.
    pub theta: Vec<f64>,
}

impl ActiveSetState {
    pub fn zeros(p: usize) -> Self {
        ActiveSetState {
            beta: vec![0.0; p],
            active: Vec::new(),
            theta: vec![0.0; p],
        }
    }

    /// State whose active set is the support of `beta`.
    pub fn from_beta(beta: Vec<f64>) -> Self {
        let active: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] != 0.0).collect();
        let theta = beta.iter().map(|&b| sign(b)).collect();
        ActiveSetState {
            beta,
            active,
            theta,
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        if self.beta.len() != p || self.theta.len() != p {
            return Err(Error::Dimension(format!(
                "warm start has {} coefficients, problem has {}",
                self.beta.len(),
                p
            )));
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `50 * p`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Solves `S_AA x = rhs` by Cholesky, refusing numerically singular blocks.
fn solve_active_block(s: &DMatrix<f64>, active: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = active.len();
    let block = DMatrix::from_fn(k, k, |a, b| s[(active[a], active[b])]);
    let max_diag = (0..k).map(|a| block[(a, a)]).fold(0.0f64, f64::max);
    let chol = block
        .cholesky()
        .ok_or(Error::SingularActiveBlock { size: k })?;
    let l = chol.l_dirty();
    let min_pivot = (0..k).map(|a| l[(a, a)] * l[(a, a)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_PIVOT_RATIO * max_diag) {
        return Err(Error::SingularActiveBlock { size: k });
    }
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

/// Solves one column problem, optionally warm-started from a previous state.
pub fn solve_column(
    prob: &ColumnProblem<'_>,
    warm: Option<&ActiveSetState>,
    opts: &SolverOptions,
) -> Result<ActiveSetState> {
    run(prob, warm, opts, None)
}

/// As [`solve_column`], recording the objective after every accepted step.
pub fn solve_column_traced(
    prob: &ColumnProblem<'_>,
    warm: Option<&ActiveSetState>,
    opts: &SolverOptions,
    trace: &mut Vec<f64>,
) -> Result<ActiveSetState> {
    run(prob, warm, opts, Some(trace))
}

fn run(
    prob: &ColumnProblem<'_>,
    warm: Option<&ActiveSetState>,
    opts: &SolverOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<ActiveSetState> {
    let p = prob.p();
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidPenalty(format!("tolerance {}", opts.tol)));
    }
    let max_iter = opts.max_iter.unwrap_or(50 * p).max(1);

    let mut beta = match warm {
        Some(w) => {
            w.check(p)?;
            w.beta.clone()
        }
        None => vec![0.0; p],
    };
    for (b, l) in beta.iter_mut().zip(&prob.lambda) {
        if l.is_infinite() || b.abs() < ZERO_THRESHOLD {
            *b = 0.0;
        }
    }
    let mut active: Vec<usize> = (0..p).filter(|&i| beta[i] != 0.0).collect();
    let mut theta: Vec<f64> = beta.iter().map(|&b| sign(b)).collect();

    if let Some(t) = trace.as_deref_mut() {
        t.push(prob.objective(&beta));
    }

    for _ in 0..max_iter {
        let mut optimal_on_active = true;

        if !active.is_empty() {
            // optimization over the active set with frozen signs
            let rhs: Vec<f64> = active
                .iter()
                .map(|&i| prob.v[i] - prob.lambda[i] * theta[i])
                .collect();
            let target = solve_active_block(prob.s, &active, &rhs)?;

            // sign consistency: shorten the step to the first zero crossing
            let mut blocking: Option<(f64, usize)> = None;
            for (a, &i) in active.iter().enumerate() {
                if sign(target[a]) != theta[i] {
                    let gamma = beta[i] / (beta[i] - target[a]);
                    if blocking.is_none_or(|(g, _)| gamma < g) {
                        blocking = Some((gamma, i));
                    }
                }
            }
            match blocking {
                None => {
                    for (a, &i) in active.iter().enumerate() {
                        beta[i] = target[a];
                    }
                }
                Some((gamma, hit)) => {
                    for (a, &i) in active.iter().enumerate() {
                        beta[i] += gamma * (target[a] - beta[i]);
                    }
                    beta[hit] = 0.0;
                    optimal_on_active = false;
                }
            }

            // drop vanished coefficients
            active.retain(|&i| {
                if beta[i].abs() < ZERO_THRESHOLD {
                    beta[i] = 0.0;
                    theta[i] = 0.0;
                    false
                } else {
                    true
                }
            });

            if let Some(t) = trace.as_deref_mut() {
                t.push(prob.objective(&beta));
            }
        }

        if !optimal_on_active {
            continue;
        }

        // optimality test over inactive coordinates; lowest index wins ties
        let grad = prob.gradient(&beta);
        let mut best: Option<(f64, usize)> = None;
        for i in 0..p {
            if beta[i] != 0.0 || prob.lambda[i].is_infinite() {
                continue;
            }
            let violation = grad[i].abs() - prob.lambda[i];
            if violation > best.map_or(0.0, |(v, _)| v) {
                best = Some((violation, i));
            }
        }
        match best {
            Some((violation, l)) if violation > opts.tol => {
                theta[l] = -sign(grad[l]);
                let pos = active.partition_point(|&i| i < l);
                active.insert(pos, l);
            }
            _ => {
                return Ok(ActiveSetState {
                    beta,
                    active,
                    theta,
                })
            }
        }
    }
    Err(Error::NonConvergence(max_iter))
}

/// Largest distance from zero to the subdifferential of the objective at
/// `beta`, over all coordinates. Zero exactly at the optimum.
pub fn kkt_residual(prob: &ColumnProblem<'_>, beta: &[f64]) -> f64 {
    let grad = prob.gradient(beta);
    let mut worst = 0.0f64;
    for i in 0..prob.p() {
        let lam = prob.lambda[i];
        let r = if beta[i] != 0.0 {
            if lam.is_infinite() {
                f64::INFINITY
            } else {
                (grad[i] + lam * sign(beta[i])).abs()
            }
        } else if lam.is_infinite() {
            0.0
        } else {
            (grad[i].abs() - lam).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

/// Full-network estimate at one penalty level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEstimate {
    /// Entry `(i, j)` is the effect of variable `i` at `t-1` on variable `j` at `t`.
    pub a_hat: DMatrix<f64>,
    pub rho: f64,
    pub df: usize,
    pub bic: f64,
    pub aic: f64,
}

impl NetworkEstimate {
    /// Number of nonzero coefficients in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        self.a_hat
            .column_iter()
            .map(|c| c.iter().filter(|x| **x != 0.0).count())
            .collect()
    }

    pub fn from_matrix(m: &EmpiricalMoments, a_hat: DMatrix<f64>, rho: f64) -> Self {
        let df = a_hat.iter().filter(|x| **x != 0.0).count();
        let mut est = NetworkEstimate {
            a_hat,
            rho,
            df,
            bic: 0.0,
            aic: 0.0,
        };
        est.bic = selection::bic(m, &est);
        est.aic = selection::aic(m, &est);
        est
    }
}

/// Estimate together with the per-column solver states for warm starts.
#[derive(Debug, Clone)]
pub struct NetworkSolution {
    pub estimate: NetworkEstimate,
    pub states: Vec<ActiveSetState>,
}

/// Solves every column of the network problem; columns run in parallel and
/// the result does not depend on scheduling.
pub fn solve_network(
    m: &EmpiricalMoments,
    penalty: &PenaltyMatrix,
    warm: Option<&[ActiveSetState]>,
    opts: &SolverOptions,
) -> Result<NetworkSolution> {
    let p = m.p;
    if penalty.weights.shape() != (p, p) {
        return Err(Error::Dimension(format!(
            "penalty is {:?}, moments have p = {}",
            penalty.weights.shape(),
            p
        )));
    }
    if let Some(w) = warm {
        if w.len() != p {
            return Err(Error::Dimension(format!("{} warm states for p = {}", w.len(), p)));
        }
    }
    let results: Vec<Result<ActiveSetState>> = (0..p)
        .into_par_iter()
        .map(|k| solve_network_column(m, penalty, warm.map(|w| &w[k]), opts, k))
        .collect();

    let mut states = Vec::with_capacity(p);
    for r in results {
        states.push(r?);
    }
    let a_hat = DMatrix::from_fn(p, p, |i, j| states[j].beta[i]);
    let estimate = NetworkEstimate::from_matrix(m, a_hat, penalty.rho);
    Ok(NetworkSolution { estimate, states })
}

/// Column `k` of the network problem, solved on its own.
pub fn solve_network_column(
    m: &EmpiricalMoments,
    penalty: &PenaltyMatrix,
    warm: Option<&ActiveSetState>,
    opts: &SolverOptions,
    k: usize,
) -> Result<ActiveSetState> {
    let prob = ColumnProblem::new(
        &m.s,
        m.v.column(k).iter().copied().collect(),
        penalty.weights.column(k).iter().copied().collect(),
    )
    .map_err(|e| e.in_column(k))?;
    solve_column(&prob, warm, opts).map_err(|e| e.in_column(k))
}
