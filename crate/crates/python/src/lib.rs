//! Python bindings for `varnet`.
//!
//! Matrices cross the boundary as lists of rows. Data matrices have one row
//! per time point; coefficient matrices are indexed `[source][target]`.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use varnet::data::standardize as standardize_rs;
use varnet::eval::{confusion, rates, support};
use varnet::moments::{empirical_moments, mle as mle_rs, EmpiricalMoments};
use varnet::penalty::{infer_classes as infer_classes_rs, resolve_pattern, NodeClass, NodeClassification, PenaltySpec, Regime};
use varnet::pipeline::{infer as infer_rs, InferenceConfig};
use varnet::selection::{rho_max as rho_max_rs, Criterion};
use varnet::simulate::{check_irrepresentability, simulate_instance, GraphConfig, SimulationConfig};
use varnet::solver::{kkt_residual as kkt_rs, solve_column as solve_column_rs, ColumnProblem, SolverOptions};

create_exception!(varnet_py, VarnetError, PyException);

fn err(e: varnet::Error) -> PyErr {
    VarnetError::new_err(e.to_string())
}

type Rows = Vec<Vec<f64>>;

fn to_matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(VarnetError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse<T: std::str::FromStr<Err = varnet::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn hub_classes(hubs: &[usize], p: usize) -> PyResult<NodeClassification> {
    if let Some(&h) = hubs.iter().find(|&&h| h >= p) {
        return Err(VarnetError::new_err(format!("hub index {h} out of range for p = {p}")));
    }
    let labels = (0..p)
        .map(|i| if hubs.contains(&i) { NodeClass::Hub } else { NodeClass::Leaf })
        .collect();
    Ok(NodeClassification::known(labels))
}

/// Lag-one moments `S = X⁻ᵀX⁻/n` and `V = X⁻ᵀX⁺/n` of standardized data.
#[pyclass(name = "Moments", get_all)]
struct PyMoments {
    s: Rows,
    v: Rows,
    n: usize,
    p: usize,
}

impl PyMoments {
    fn inner(&self) -> PyResult<EmpiricalMoments> {
        EmpiricalMoments::from_parts(to_matrix(&self.s)?, to_matrix(&self.v)?, self.n).map_err(err)
    }
}

#[pymethods]
impl PyMoments {
    /// Standardizes `data` and computes its moments.
    #[staticmethod]
    #[pyo3(signature = (data, impute = false))]
    fn from_data(data: Rows, impute: bool) -> PyResult<Self> {
        let x = standardize_rs(&to_matrix(&data)?, None, impute).map_err(err)?;
        let m = empirical_moments(&x).map_err(err)?;
        Ok(PyMoments {
            s: to_rows(&m.s),
            v: to_rows(&m.v),
            n: m.n,
            p: m.p,
        })
    }

    /// Unpenalized estimate `S⁻¹V`.
    fn mle(&self) -> PyResult<Rows> {
        Ok(to_rows(&mle_rs(&self.inner()?).map_err(err)?))
    }

    /// Smallest Lasso level that gives the empty network.
    fn rho_max(&self) -> PyResult<f64> {
        let m = self.inner()?;
        let base = resolve_pattern(&PenaltySpec::lasso(1.0), m.p).map_err(err)?.0;
        rho_max_rs(&m, &base).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Moments(p={}, n={})", self.p, self.n)
    }
}

/// Selected network and the path it was chosen from.
#[pyclass(name = "Inference", get_all)]
struct PyInference {
    adjacency: Rows,
    rho: f64,
    df: usize,
    bic: f64,
    aic: f64,
    /// `(rho, df, bic, aic)` for every solved grid point.
    path: Vec<(f64, usize, f64, f64)>,
    stop_reason: String,
    /// Hub indices for the class-based penalties, otherwise `None`.
    hubs: Option<Vec<usize>>,
}

#[pymethods]
impl PyInference {
    #[getter]
    fn null_selected(&self) -> bool {
        self.df == 0
    }

    /// Nonzero coefficients as `(source, target)` index pairs.
    fn edges(&self) -> PyResult<Vec<(usize, usize)>> {
        Ok(support(&to_matrix(&self.adjacency)?))
    }

    fn __repr__(&self) -> String {
        format!("Inference(df={}, rho={}, stop_reason={:?})", self.df, self.rho, self.stop_reason)
    }
}

/// One simulated network with its time course.
#[pyclass(name = "Simulation", get_all)]
struct PySimulation {
    data: Rows,
    a_true: Rows,
    edges: Vec<(usize, usize)>,
    hubs: Vec<usize>,
}

/// Centers each column and scales it to unit variance.
#[pyfunction]
#[pyo3(signature = (data, impute = false))]
fn standardize(data: Rows, impute: bool) -> PyResult<Rows> {
    let x = standardize_rs(&to_matrix(&data)?, None, impute).map_err(err)?;
    Ok(to_rows(x.values()))
}

/// Minimizes `½βᵀSβ - βᵀv + Σ λᵢ|βᵢ|`; returns `(beta, kkt_residual)`.
#[pyfunction]
fn solve_column(s: Rows, v: Vec<f64>, lam: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let s = to_matrix(&s)?;
    let prob = ColumnProblem::new(&s, v, lam).map_err(err)?;
    let st = solve_column_rs(&prob, None, &SolverOptions::default()).map_err(err)?;
    let r = kkt_rs(&prob, &st.beta);
    Ok((st.beta, r))
}

/// Largest violation of the optimality conditions at `beta`.
#[pyfunction]
fn kkt_residual(s: Rows, v: Vec<f64>, lam: Vec<f64>, beta: Vec<f64>) -> PyResult<f64> {
    let s = to_matrix(&s)?;
    let prob = ColumnProblem::new(&s, v, lam).map_err(err)?;
    if beta.len() != prob.p() {
        return Err(VarnetError::new_err("beta has the wrong length"));
    }
    Ok(kkt_rs(&prob, &beta))
}

/// Infers a network from raw data.
///
/// `penalty` is one of `lasso`, `adaptive`, `known`, `inferred`; the known
/// regime needs `hubs`.
#[pyfunction]
#[pyo3(signature = (
    data, penalty = "lasso", criterion = "bic", hubs = None, ratio = 2.0,
    normalize = true, seed = 0, impute = false, grid_size = 50, terminal_ratio = 0.01
))]
#[allow(clippy::too_many_arguments)]
fn infer(
    py: Python<'_>,
    data: Rows,
    penalty: &str,
    criterion: &str,
    hubs: Option<Vec<usize>>,
    ratio: f64,
    normalize: bool,
    seed: u64,
    impute: bool,
    grid_size: usize,
    terminal_ratio: f64,
) -> PyResult<PyInference> {
    let regime: Regime = parse(penalty)?;
    let criterion: Criterion = parse(criterion)?;
    let raw = to_matrix(&data)?;
    let classes = hubs.map(|h| hub_classes(&h, raw.ncols())).transpose()?;
    let cfg = InferenceConfig {
        regime,
        criterion,
        init_criterion: criterion,
        ratio,
        normalize,
        seed,
        grid_size,
        terminal_ratio,
        ..Default::default()
    };
    let fit = py
        .detach(|| {
            let x = standardize_rs(&raw, None, impute)?;
            let m = empirical_moments(&x)?;
            infer_rs(&m, &cfg, classes.as_ref())
        })
        .map_err(err)?;
    Ok(PyInference {
        adjacency: to_rows(&fit.best.a_hat),
        rho: fit.best.rho,
        df: fit.best.df,
        bic: fit.best.bic,
        aic: fit.best.aic,
        path: fit.path.estimates.iter().map(|e| (e.rho, e.df, e.bic, e.aic)).collect(),
        stop_reason: fit.path.stop_reason.name().to_string(),
        hubs: fit.classes.as_ref().map(NodeClassification::hubs),
    })
}

/// Draws a hub-structured network and a time course of `n + 1` points.
#[pyfunction]
#[pyo3(signature = (p, n, seed = 0, replicate = 0, edges = None, sigma2 = 0.1, stationary = true))]
fn simulate(
    p: usize,
    n: usize,
    seed: u64,
    replicate: u64,
    edges: Option<usize>,
    sigma2: f64,
    stationary: bool,
) -> PyResult<PySimulation> {
    let cfg = SimulationConfig {
        graph: GraphConfig { edges, ..Default::default() },
        sigma2,
        stationary,
        ..SimulationConfig::new(p, n)
    };
    let inst = simulate_instance(&cfg, seed, replicate).map_err(err)?;
    Ok(PySimulation {
        data: to_rows(inst.x.values()),
        a_true: to_rows(&inst.a_true),
        edges: inst.edges,
        hubs: inst.classes.hubs(),
    })
}

/// Hub indices from a two-component mixture fitted to the row norms of `a0`.
#[pyfunction]
#[pyo3(signature = (a0, seed = 0))]
fn infer_classes(a0: Rows, seed: u64) -> PyResult<Vec<usize>> {
    Ok(infer_classes_rs(&to_matrix(&a0)?, seed).map_err(err)?.hubs())
}

/// Fraction of columns of `a_true` that fail the irrepresentable condition
/// on the moments of `data`.
#[pyfunction]
fn irrepresentability(data: Rows, a_true: Rows) -> PyResult<f64> {
    let x = standardize_rs(&to_matrix(&data)?, None, false).map_err(err)?;
    let m = empirical_moments(&x).map_err(err)?;
    let r = check_irrepresentability(&m, &to_matrix(&a_true)?).map_err(err)?;
    Ok(r.fraction_failing)
}

/// Confusion counts and rates of `estimate` against a true edge list.
/// Undefined rates are `None`.
#[pyfunction]
#[pyo3(signature = (estimate, truth, include_diagonal = true))]
fn evaluate(
    py: Python<'_>,
    estimate: Rows,
    truth: Vec<(usize, usize)>,
    include_diagonal: bool,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let a = to_matrix(&estimate)?;
    if let Some(e) = truth.iter().find(|(i, j)| *i >= a.nrows() || *j >= a.ncols()) {
        return Err(VarnetError::new_err(format!("edge {e:?} out of range")));
    }
    let c = confusion(&a, &truth, include_diagonal);
    let r = rates(&c);
    let d = pyo3::types::PyDict::new(py);
    d.set_item("tp", c.tp)?;
    d.set_item("fp", c.fp)?;
    d.set_item("tn", c.tn)?;
    d.set_item("fn", c.fn_)?;
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("fallout", r.fallout)?;
    Ok(d.unbind())
}

#[pymodule]
fn varnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VarnetError", m.py().get_type::<VarnetError>())?;
    m.add_class::<PyMoments>()?;
    m.add_class::<PyInference>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(standardize, m)?)?;
    m.add_function(wrap_pyfunction!(solve_column, m)?)?;
    m.add_function(wrap_pyfunction!(kkt_residual, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(infer_classes, m)?)?;
    m.add_function(wrap_pyfunction!(irrepresentability, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
