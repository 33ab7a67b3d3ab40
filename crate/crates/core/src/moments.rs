//! Empirical moments of a VAR(1) time course and the unpenalized estimator.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::TimeCourseMatrix;
use crate::error::{Error, Result};

/// Default cap on the condition number of `S` accepted by [`mle`].
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Contemporaneous covariance `S` and lag-one covariance `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Number of transitions.
    pub n: usize,
    pub p: usize,
}

impl EmpiricalMoments {
    /// Builds moments from precomputed matrices. `s` is symmetrized.
    pub fn from_parts(s: DMatrix<f64>, v: DMatrix<f64>, n: usize) -> Result<Self> {
        let p = s.nrows();
        if s.ncols() != p || v.shape() != (p, p) || p == 0 {
            return Err(Error::Dimension(format!(
                "S is {:?} and V is {:?}",
                s.shape(),
                v.shape()
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("need at least one transition".into()));
        }
        let s = (&s + s.transpose()) * 0.5;
        Ok(EmpiricalMoments { s, v, n, p })
    }

    /// The largest number of coefficients a column can activate, `min(n, p)`.
    pub fn capacity(&self) -> usize {
        self.n.min(self.p)
    }
}

/// `S = X_past' X_past / n` and `V = X_past' X_future / n`, where `X_past`
/// drops the last row and `X_future` drops the first.
pub fn empirical_moments(x: &TimeCourseMatrix) -> Result<EmpiricalMoments> {
    if !x.is_standardized() {
        return Err(Error::NotStandardized);
    }
    Ok(raw_moments(x.values()))
}

/// Moments of an arbitrary `(n+1) x p` matrix, without the standardization check.
pub fn raw_moments(values: &DMatrix<f64>) -> EmpiricalMoments {
    let rows = values.nrows();
    let n = rows - 1;
    let p = values.ncols();
    let past = values.rows(0, n);
    let future = values.rows(1, n);
    let inv_n = 1.0 / n as f64;
    let s = past.tr_mul(&past) * inv_n;
    let s = (&s + s.transpose()) * 0.5;
    let v = past.tr_mul(&future) * inv_n;
    EmpiricalMoments { s, v, n, p }
}

/// Ratio of extreme eigenvalues of a symmetric PSD matrix; infinite when the
/// smallest is not positive.
pub fn condition_number(s: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(s.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Maximum-likelihood estimate `S^-1 V` with the default condition cap.
pub fn mle(m: &EmpiricalMoments) -> Result<DMatrix<f64>> {
    mle_with_cap(m, DEFAULT_CONDITION_CAP)
}

pub fn mle_with_cap(m: &EmpiricalMoments, cap: f64) -> Result<DMatrix<f64>> {
    let condition = condition_number(&m.s);
    if !(condition < cap) {
        return Err(Error::SingularCovariance { condition, cap });
    }
    let chol = m
        .s
        .clone()
        .cholesky()
        .ok_or(Error::SingularCovariance { condition, cap })?;
    Ok(chol.solve(&m.v))
}
