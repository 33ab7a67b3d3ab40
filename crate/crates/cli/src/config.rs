use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use varnet::penalty::{Regime, DEFAULT_RATIO};
use varnet::pipeline::InferenceConfig;
use varnet::selection::{Criterion, DEFAULT_GRID_SIZE, DEFAULT_TERMINAL_RATIO};

/// A complete, replayable description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Infer(InferArgs),
    Simulate(SimulateArgs),
    Bench(BenchArgs),
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Infer(_) => "infer",
            Command::Simulate(_) => "simulate",
            Command::Bench(_) => "bench",
            Command::Eval(_) => "eval",
        }
    }
}

fn default_ratio() -> f64 {
    DEFAULT_RATIO
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_terminal_ratio() -> f64 {
    DEFAULT_TERMINAL_RATIO
}
fn default_criterion() -> Criterion {
    Criterion::Bic
}
fn default_true() -> bool {
    true
}
fn default_hub_prob() -> f64 {
    0.1
}
fn default_hub_to_leaf() -> f64 {
    0.85
}
fn default_sigma2() -> f64 {
    0.1
}
fn default_replicates() -> usize {
    1
}
fn default_bench_seed() -> u64 {
    1
}

/// Penalty and selection settings shared by `infer` and `bench`.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SelectionArgs {
    /// Hub-to-leaf penalty ratio for the class-based regimes.
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Use raw class weights instead of weights with mean one.
    #[arg(long = "no-normalize", action = clap::ArgAction::SetFalse)]
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Criterion for the initial Lasso fit of the adaptive and inferred
    /// regimes. `bench` ignores it and uses the selection criterion.
    #[arg(long, default_value = "bic")]
    #[serde(default = "default_criterion")]
    pub init_criterion: Criterion,
    /// Number of penalty levels on the path.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Last grid level as a fraction of the first.
    #[arg(long, default_value_t = DEFAULT_TERMINAL_RATIO)]
    #[serde(default = "default_terminal_ratio")]
    pub terminal_ratio: f64,
}

impl Default for SelectionArgs {
    fn default() -> Self {
        SelectionArgs {
            ratio: DEFAULT_RATIO,
            normalize: true,
            init_criterion: Criterion::Bic,
            grid_size: DEFAULT_GRID_SIZE,
            terminal_ratio: DEFAULT_TERMINAL_RATIO,
        }
    }
}

impl SelectionArgs {
    pub fn inference(&self, regime: Regime, criterion: Criterion, seed: u64) -> InferenceConfig {
        InferenceConfig {
            regime,
            ratio: self.ratio,
            normalize: self.normalize,
            criterion,
            init_criterion: self.init_criterion,
            grid_size: self.grid_size,
            terminal_ratio: self.terminal_ratio,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InferArgs {
    /// Data matrix: header of names, one row per time point.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// lasso, adaptive, known or inferred.
    #[arg(long, default_value = "lasso")]
    pub penalty: Regime,
    /// Model selection criterion: bic or aic.
    #[arg(long, default_value = "bic")]
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
    /// Two-column `name,hub|leaf` file for the known-class regime.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<PathBuf>,
    /// Fill missing values from neighbouring time points.
    #[arg(long)]
    #[serde(default)]
    pub impute: bool,
    /// Also write the selected network in dot format.
    #[arg(long)]
    #[serde(default)]
    pub dot: bool,
    /// Seed for the class mixture fit.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: usize,
    /// Number of transitions; each data file has n + 1 rows.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of edges (default 2p).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    #[serde(default = "default_hub_prob")]
    pub hub_prob: f64,
    #[arg(long, default_value_t = 0.85)]
    #[serde(default = "default_hub_to_leaf")]
    pub hub_to_leaf: f64,
    #[arg(long, default_value_t = 0.1)]
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    /// Accept coefficient draws with spectral radius of at least one.
    #[arg(long)]
    #[serde(default)]
    pub allow_explosive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    pub p: usize,
    pub n: usize,
    pub replicates: usize,
}

impl std::str::FromStr for Setting {
    type Err = String;

    /// `P:N:REPLICATES`, e.g. `20:10:100`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad setting `{s}`, expected P:N:REPLICATES"));
        match parts.as_slice() {
            [p, n, r] => Ok(Setting {
                p: parse(p)?,
                n: parse(n)?,
                replicates: parse(r)?,
            }),
            _ => Err(format!("bad setting `{s}`, expected P:N:REPLICATES")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Settings as P:N:REPLICATES; repeatable.
    #[arg(long = "setting", required = true)]
    pub settings: Vec<Setting>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_bench_seed")]
    pub seed: u64,
    /// Leave self-loops out of the confusion counts.
    #[arg(long)]
    #[serde(default)]
    pub off_diagonal: bool,
    /// Only run the irrepresentability audit.
    #[arg(long)]
    #[serde(default)]
    pub audit_only: bool,
    /// Accept coefficient draws with spectral radius of at least one.
    #[arg(long)]
    #[serde(default)]
    pub allow_explosive: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Estimated edge list.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Gold-standard edge list.
    #[arg(long)]
    pub truth: PathBuf,
    /// Data file whose header lists every node; otherwise nodes are taken
    /// from the two edge lists.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<PathBuf>,
    /// Metrics file; printed to stdout when absent.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub off_diagonal: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_parse() {
        let s: Setting = "20:10:100".parse().unwrap();
        assert_eq!(s, Setting { p: 20, n: 10, replicates: 100 });
        assert!("20:10".parse::<Setting>().is_err());
        assert!("a:1:1".parse::<Setting>().is_err());
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg: RunConfig = toml::from_str("command = \"infer\"\ndata = \"x.csv\"\nout = \"o\"\npenalty = \"known\"\n").unwrap();
        let Command::Infer(a) = &cfg.command else { panic!("wrong command") };
        assert_eq!(a.penalty, Regime::Known);
        assert_eq!(a.criterion, Criterion::Bic);
        assert_eq!(a.selection, SelectionArgs::default());
        assert_eq!(cfg.threads, None);
    }

    #[test]
    fn configs_round_trip() {
        let cfg = RunConfig {
            threads: Some(3),
            command: Command::Bench(BenchArgs {
                settings: vec![Setting { p: 20, n: 10, replicates: 5 }, Setting { p: 50, n: 40, replicates: 1 }],
                out: "b".into(),
                seed: 7,
                off_diagonal: true,
                audit_only: false,
                allow_explosive: false,
                selection: SelectionArgs { ratio: 3.0, normalize: false, ..Default::default() },
            }),
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
