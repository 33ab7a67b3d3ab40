//! Simulation benchmark: every regime under both criteria on replicated
//! hub-structured instances, plus the irrepresentability audit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{confusion, rates, summarize, ConfusionCounts, RateSummary, Rates, Summary};
use crate::moments::empirical_moments;
use crate::penalty::Regime;
use crate::pipeline::{infer_with_init, lasso_path, InferenceConfig};
use crate::selection::Criterion;
use crate::simulate::{check_irrepresentability, simulate_instance, GraphConfig, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSetting {
    pub p: usize,
    pub n: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub inference: InferenceConfig,
    pub graph: GraphConfig,
    pub sigma2: f64,
    pub stationary: bool,
    pub include_diagonal: bool,
    pub regimes: Vec<Regime>,
    pub criteria: Vec<Criterion>,
    /// Skip the estimators and only audit irrepresentability.
    pub audit_only: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 1,
            inference: InferenceConfig::default(),
            graph: GraphConfig::default(),
            sigma2: 0.1,
            stationary: true,
            include_diagonal: true,
            regimes: Regime::ALL.to_vec(),
            criteria: vec![Criterion::Bic, Criterion::Aic],
            audit_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub regime: Regime,
    pub criterion: Criterion,
    pub counts: ConfusionCounts,
    pub rates: Rates,
    pub df: usize,
    pub rho: f64,
    /// Share of nodes whose inferred class matches the planted one.
    pub class_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    /// `None` when a true support block was singular.
    pub irrepresentability_failing: Option<f64>,
    pub methods: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub regime: Regime,
    pub criterion: Criterion,
    pub rates: RateSummary,
    pub mean_df: f64,
    /// Replicates where the null model was selected.
    pub null_selected: usize,
    pub class_accuracy: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub setting: BenchSetting,
    pub replicates: Vec<ReplicateOutcome>,
    /// Replicates that failed, with the error message.
    pub failures: Vec<(u64, String)>,
    pub irrepresentability: Summary,
    pub methods: Vec<MethodSummary>,
}

/// Seed of one setting's replicate streams.
pub fn setting_seed(seed: u64, setting: &BenchSetting) -> u64 {
    seed ^ ((setting.p as u64) << 32) ^ ((setting.n as u64) << 12)
}

pub fn run_replicate(setting: &BenchSetting, cfg: &BenchConfig, replicate: u64) -> Result<ReplicateOutcome> {
    let sim = SimulationConfig {
        p: setting.p,
        n: setting.n,
        graph: cfg.graph,
        sigma2: cfg.sigma2,
        stationary: cfg.stationary,
    };
    let inst = simulate_instance(&sim, setting_seed(cfg.seed, setting), replicate)?;
    let m = empirical_moments(&inst.x)?;

    let irrepresentability_failing = match check_irrepresentability(&m, &inst.a_true) {
        Ok(r) => Some(r.fraction_failing),
        Err(e) => {
            log::warn!("replicate {replicate}: irrepresentability not checked: {e}");
            None
        }
    };

    let mut methods = Vec::new();
    if !cfg.audit_only {
        let base = InferenceConfig {
            seed: cfg.inference.seed ^ replicate,
            ..cfg.inference
        };
        let init_path = lasso_path(&m, &base)?;
        for &criterion in &cfg.criteria {
            for &regime in &cfg.regimes {
                let run_cfg = InferenceConfig {
                    regime,
                    criterion,
                    init_criterion: criterion,
                    ..base
                };
                let res = infer_with_init(&m, &run_cfg, Some(&inst.classes), Some(&init_path))?;
                let counts = confusion(&res.best.a_hat, &inst.edges, cfg.include_diagonal);
                let class_accuracy = (regime == Regime::Inferred).then(|| {
                    let z = res.classes.as_ref().expect("inferred regime yields classes");
                    let agree = z
                        .labels
                        .iter()
                        .zip(&inst.classes.labels)
                        .filter(|(a, b)| a == b)
                        .count();
                    agree as f64 / setting.p as f64
                });
                methods.push(MethodOutcome {
                    regime,
                    criterion,
                    counts,
                    rates: rates(&counts),
                    df: res.best.df,
                    rho: res.best.rho,
                    class_accuracy,
                });
            }
        }
    }
    Ok(ReplicateOutcome {
        replicate,
        irrepresentability_failing,
        methods,
    })
}

/// Runs all replicates of a setting in parallel; output order is by replicate.
pub fn run_setting(setting: &BenchSetting, cfg: &BenchConfig) -> SettingReport {
    let results: Vec<(u64, Result<ReplicateOutcome>)> = (0..setting.replicates as u64)
        .into_par_iter()
        .map(|r| (r, run_replicate(setting, cfg, r)))
        .collect();

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(out) => replicates.push(out),
            Err(e) => {
                log::warn!("p={} n={} replicate {r} failed: {e}", setting.p, setting.n);
                failures.push((r, e.to_string()));
            }
        }
    }

    let irrepresentability = Summary::of(replicates.iter().map(|r| r.irrepresentability_failing));
    let mut methods = Vec::new();
    if !cfg.audit_only {
        for &criterion in &cfg.criteria {
            for &regime in &cfg.regimes {
                let picked: Vec<&MethodOutcome> = replicates
                    .iter()
                    .flat_map(|r| r.methods.iter())
                    .filter(|m| m.regime == regime && m.criterion == criterion)
                    .collect();
                let rate_list: Vec<Rates> = picked.iter().map(|m| m.rates).collect();
                let k = picked.len().max(1) as f64;
                methods.push(MethodSummary {
                    regime,
                    criterion,
                    rates: summarize(&rate_list),
                    mean_df: picked.iter().map(|m| m.df as f64).sum::<f64>() / k,
                    null_selected: picked.iter().filter(|m| m.df == 0).count(),
                    class_accuracy: Summary::of(picked.iter().map(|m| m.class_accuracy)),
                });
            }
        }
    }
    SettingReport {
        setting: *setting,
        replicates,
        failures,
        irrepresentability,
        methods,
    }
}

impl SettingReport {
    pub fn method(&self, regime: Regime, criterion: Criterion) -> Option<&MethodSummary> {
        self.methods
            .iter()
            .find(|m| m.regime == regime && m.criterion == criterion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_setting_is_deterministic() {
        let setting = BenchSetting { p: 8, n: 16, replicates: 3 };
        let cfg = BenchConfig::default();
        let a = run_setting(&setting, &cfg);
        let b = run_setting(&setting, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.replicates.len() + a.failures.len(), 3);
        assert_eq!(a.methods.len(), 8);
    }
}
