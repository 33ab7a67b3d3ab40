//! Sparse directed network inference from multivariate time courses under a
//! first-order vector autoregressive model.
//!
//! Coefficient `A[(i, j)]` is the effect of variable `i` at time `t-1` on
//! variable `j` at time `t`. Each column of `A` is estimated by a weighted
//! Lasso solved with an active-set method; the weights can encode a hub/leaf
//! structure, either known or inferred from an initial fit, and the global
//! penalty level is chosen by BIC or AIC along a warm-started path.
//!
//! ```
//! use varnet::prelude::*;
//!
//! let inst = simulate_instance(&SimulationConfig::new(10, 20), 42, 0).unwrap();
//! let m = empirical_moments(&inst.x).unwrap();
//! let fit = infer(&m, &InferenceConfig::for_regime(Regime::Known), Some(&inst.classes)).unwrap();
//! assert_eq!(fit.best.a_hat.shape(), (10, 10));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod io;
pub mod moments;
pub mod penalty;
pub mod pipeline;
pub mod selection;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{standardize, TimeCourseMatrix};
    pub use crate::error::{Error, Result};
    pub use crate::eval::{confusion, rates, ConfusionCounts, Rates};
    pub use crate::moments::{empirical_moments, mle, EmpiricalMoments};
    pub use crate::penalty::{
        build_penalty, infer_classes, NodeClass, NodeClassification, PenaltyMatrix, PenaltySpec, Regime,
    };
    pub use crate::pipeline::{infer, Inference, InferenceConfig};
    pub use crate::selection::{
        aic, bic, make_grid, rho_max, select_best, solve_path, Criterion, PenaltyPath, StopReason,
    };
    pub use crate::simulate::{check_irrepresentability, simulate_instance, SimulationConfig};
    pub use crate::solver::{
        kkt_residual, solve_column, solve_network, ActiveSetState, ColumnProblem, NetworkEstimate,
        SolverOptions,
    };
}
