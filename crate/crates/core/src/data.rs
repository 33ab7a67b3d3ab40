//! Time-course observation matrices and their standardization.
//!
//! Rows are consecutive time points `t = 0..n`, columns are variables. Missing
//! entries in raw input are encoded as `NaN`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `(n+1) x p` observation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCourseMatrix {
    values: DMatrix<f64>,
    names: Vec<String>,
    standardized: bool,
}

impl TimeCourseMatrix {
    /// Wraps raw values without any transformation. Missing entries are not
    /// allowed here; use [`standardize`] with imputation for incomplete data.
    pub fn new(values: DMatrix<f64>, names: Option<Vec<String>>) -> Result<Self> {
        check_shape(&values)?;
        if let Some((row, col)) = first_missing(&values) {
            return Err(Error::MissingValueWithImputeOff { row, col });
        }
        let names = resolve_names(names, values.ncols())?;
        Ok(TimeCourseMatrix {
            values,
            names,
            standardized: false,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Number of transitions, i.e. time points minus one.
    pub fn n(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Default variable names `V1..Vp`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("V{i}")).collect()
}

fn resolve_names(names: Option<Vec<String>>, p: usize) -> Result<Vec<String>> {
    match names {
        Some(names) if names.len() != p => Err(Error::Dimension(format!(
            "{} names for {} columns",
            names.len(),
            p
        ))),
        Some(names) => Ok(names),
        None => Ok(default_names(p)),
    }
}

fn check_shape(values: &DMatrix<f64>) -> Result<()> {
    if values.nrows() < 2 || values.ncols() < 1 {
        return Err(Error::Dimension(format!(
            "need at least 2 time points and 1 variable, got {}x{}",
            values.nrows(),
            values.ncols()
        )));
    }
    Ok(())
}

fn first_missing(values: &DMatrix<f64>) -> Option<(usize, usize)> {
    // row-major scan so the reported position is the earliest time point
    for r in 0..values.nrows() {
        for c in 0..values.ncols() {
            if !values[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

/// Fills missing entries of one column in place.
///
/// Interior gaps take the mean of the nearest observed values before and after;
/// leading and trailing gaps copy the nearest observed value.
fn impute_column(col: &mut [f64]) -> bool {
    let observed: Vec<usize> = (0..col.len()).filter(|&t| col[t].is_finite()).collect();
    if observed.is_empty() {
        return false;
    }
    let first = observed[0];
    let last = *observed.last().unwrap();
    for t in 0..first {
        col[t] = col[first];
    }
    for t in last + 1..col.len() {
        col[t] = col[last];
    }
    for w in observed.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a + 1 {
            let fill = 0.5 * (col[a] + col[b]);
            for v in &mut col[a + 1..b] {
                *v = fill;
            }
        }
    }
    true
}

/// Centers every column and scales it to unit sample variance.
///
/// The variance divisor is `n`, the number of transitions (time points minus
/// one), which is the divisor used for the empirical moments.
pub fn standardize(
    raw: &DMatrix<f64>,
    names: Option<Vec<String>>,
    impute: bool,
) -> Result<TimeCourseMatrix> {
    check_shape(raw)?;
    let names = resolve_names(names, raw.ncols())?;
    let rows = raw.nrows();
    let divisor = (rows - 1) as f64;
    let mut values = raw.clone();

    if !impute {
        if let Some((row, col)) = first_missing(raw) {
            return Err(Error::MissingValueWithImputeOff { row, col });
        }
    }

    for (c, name) in names.iter().enumerate() {
        let mut col: Vec<f64> = values.column(c).iter().copied().collect();
        if impute && !impute_column(&mut col) {
            return Err(Error::AllMissingColumn(name.clone()));
        }
        let mean = col.iter().sum::<f64>() / rows as f64;
        let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / divisor).sqrt();
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(sd > 1e-12 * scale.max(1e-300)) {
            return Err(Error::ConstantColumn(name.clone()));
        }
        for (r, x) in col.iter().enumerate() {
            values[(r, c)] = (x - mean) / sd;
        }
    }

    Ok(TimeCourseMatrix {
        values,
        names,
        standardized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_column() {
        let raw = DMatrix::from_row_slice(2, 1, &[2.0, 4.0]);
        let x = standardize(&raw, None, false).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(x.values()[(0, 0)], -h, epsilon = 1e-12);
        assert_abs_diff_eq!(x.values()[(1, 0)], h, epsilon = 1e-12);
        // sample variance with divisor n = 1
        let var: f64 = x.values().iter().map(|v| v * v).sum::<f64>() / 1.0;
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn idempotent() {
        let raw = DMatrix::from_row_slice(4, 2, &[1.0, 3.0, 2.0, -1.0, 7.0, 0.5, -2.0, 2.0]);
        let once = standardize(&raw, None, false).unwrap();
        let twice = standardize(once.values(), None, false).unwrap();
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn interior_gap_uses_neighbour_mean() {
        let mut col = vec![1.0, f64::NAN, 3.0];
        assert!(impute_column(&mut col));
        assert_eq!(col, vec![1.0, 2.0, 3.0]);

        let mut col = vec![f64::NAN, 4.0, f64::NAN, f64::NAN, 8.0, f64::NAN];
        assert!(impute_column(&mut col));
        assert_eq!(col, vec![4.0, 4.0, 6.0, 6.0, 8.0, 8.0]);
    }

    #[test]
    fn imputed_then_standardized() {
        let raw = DMatrix::from_row_slice(3, 1, &[1.0, f64::NAN, 3.0]);
        let x = standardize(&raw, None, true).unwrap();
        // (1, 2, 3) -> centered (-1, 0, 1), sd = 1 with divisor 2
        assert_abs_diff_eq!(x.values()[(0, 0)], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.values()[(1, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.values()[(2, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn error_paths() {
        let raw = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let names = Some(vec!["a".to_string(), "b".to_string()]);
        assert_eq!(
            standardize(&raw, names, false),
            Err(Error::ConstantColumn("b".into()))
        );

        let raw = DMatrix::from_row_slice(3, 1, &[1.0, f64::NAN, 3.0]);
        assert_eq!(
            standardize(&raw, None, false),
            Err(Error::MissingValueWithImputeOff { row: 1, col: 0 })
        );

        let raw = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 2.0, f64::NAN]);
        assert_eq!(
            standardize(&raw, None, true),
            Err(Error::AllMissingColumn("V2".into()))
        );

        let raw = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(standardize(&raw, None, false), Err(Error::Dimension(_))));
    }
}
