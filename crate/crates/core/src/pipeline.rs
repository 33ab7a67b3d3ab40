//! End-to-end inference: initial Lasso, penalty construction, path and
//! model selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::EmpiricalMoments;
use crate::penalty::{NodeClassification, PenaltySpec, Regime, DEFAULT_RATIO};
use crate::selection::{
    auto_path, select_best, select_best_index, Criterion, PenaltyPath, StopReason,
    DEFAULT_GRID_SIZE, DEFAULT_TERMINAL_RATIO,
};
use crate::solver::{NetworkEstimate, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub regime: Regime,
    pub ratio: f64,
    pub normalize: bool,
    pub criterion: Criterion,
    /// Criterion used to pick the initial Lasso estimate.
    pub init_criterion: Criterion,
    pub grid_size: usize,
    pub terminal_ratio: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            regime: Regime::Lasso,
            ratio: DEFAULT_RATIO,
            normalize: true,
            criterion: Criterion::Bic,
            init_criterion: Criterion::Bic,
            grid_size: DEFAULT_GRID_SIZE,
            terminal_ratio: DEFAULT_TERMINAL_RATIO,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl InferenceConfig {
    pub fn for_regime(regime: Regime) -> Self {
        InferenceConfig {
            regime,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Inference {
    pub regime: Regime,
    pub path: PenaltyPath,
    pub best: NetworkEstimate,
    /// Initial Lasso estimate for the adaptive and inferred-class regimes.
    pub init: Option<NetworkEstimate>,
    pub classes: Option<NodeClassification>,
}

impl Inference {
    pub fn null_selected(&self) -> bool {
        self.best.df == 0
    }
}

/// Plain-Lasso path on the default grid of `cfg`.
pub fn lasso_path(m: &EmpiricalMoments, cfg: &InferenceConfig) -> Result<PenaltyPath> {
    let spec = spec_for(cfg, Regime::Lasso, None, None);
    auto_path(m, &spec, cfg.grid_size, cfg.terminal_ratio, &cfg.solver)
}

fn spec_for(
    cfg: &InferenceConfig,
    regime: Regime,
    init: Option<DMatrix<f64>>,
    classes: Option<NodeClassification>,
) -> PenaltySpec {
    PenaltySpec {
        ratio: cfg.ratio,
        normalize: cfg.normalize,
        init,
        classes,
        seed: cfg.seed,
        ..PenaltySpec::new(regime, 1.0)
    }
}

/// Runs the configured regime. `classes` is required for the known-class
/// regime and ignored otherwise.
pub fn infer(
    m: &EmpiricalMoments,
    cfg: &InferenceConfig,
    classes: Option<&NodeClassification>,
) -> Result<Inference> {
    let init_path = if cfg.regime.needs_init() {
        Some(lasso_path(m, cfg)?)
    } else {
        None
    };
    infer_with_init(m, cfg, classes, init_path.as_ref())
}

/// As [`infer`], reusing a precomputed plain-Lasso path.
pub fn infer_with_init(
    m: &EmpiricalMoments,
    cfg: &InferenceConfig,
    classes: Option<&NodeClassification>,
    init_path: Option<&PenaltyPath>,
) -> Result<Inference> {
    match cfg.regime {
        Regime::Lasso => {
            let path = match init_path {
                Some(p) => p.clone(),
                None => lasso_path(m, cfg)?,
            };
            finish(cfg, path, None)
        }
        Regime::Known => {
            let z = classes.ok_or(Error::MissingClassification)?;
            let spec = spec_for(cfg, Regime::Known, None, Some(z.clone()));
            let path = auto_path(m, &spec, cfg.grid_size, cfg.terminal_ratio, &cfg.solver)?;
            finish(cfg, path, None)
        }
        Regime::Adaptive | Regime::Inferred => {
            let owned;
            let init_path = match init_path {
                Some(p) => p,
                None => {
                    owned = lasso_path(m, cfg)?;
                    &owned
                }
            };
            let init = select_best(init_path, cfg.init_criterion)?.clone();
            if cfg.regime == Regime::Adaptive && init.df == 0 {
                // every coefficient is excluded by the initial fit
                let path = PenaltyPath {
                    grid: vec![init.rho],
                    estimates: vec![NetworkEstimate::from_matrix(m, DMatrix::zeros(m.p, m.p), init.rho)],
                    stop_reason: StopReason::GridExhausted,
                    failure: None,
                    classes: None,
                };
                return finish(cfg, path, Some(init));
            }
            let spec = spec_for(cfg, cfg.regime, Some(init.a_hat.clone()), None);
            let path = auto_path(m, &spec, cfg.grid_size, cfg.terminal_ratio, &cfg.solver)?;
            finish(cfg, path, Some(init))
        }
    }
}

fn finish(cfg: &InferenceConfig, path: PenaltyPath, init: Option<NetworkEstimate>) -> Result<Inference> {
    let k = select_best_index(&path.estimates, cfg.criterion).ok_or_else(|| {
        path.failure.clone().unwrap_or(Error::EmptyPath)
    })?;
    let best = path.estimates[k].clone();
    Ok(Inference {
        regime: cfg.regime,
        classes: path.classes.clone(),
        path,
        best,
        init,
    })
}
