use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use nalgebra::DMatrix;

use varnet::bench::{run_setting, BenchConfig, BenchSetting, SettingReport};
use varnet::data::standardize;
use varnet::eval::{confusion, rates, Rates, Summary};
use varnet::io;
use varnet::moments::empirical_moments;
use varnet::penalty::{ClassSource, Regime};
use varnet::pipeline::infer;
use varnet::selection::{Criterion, PenaltyPath};
use varnet::simulate::{simulate_instance, GraphConfig, SimulationConfig};

use crate::config::{BenchArgs, EvalArgs, InferArgs, RunConfig, SimulateArgs};

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| varnet::Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    io::write_string(&dir.join(name), contents)?;
    Ok(())
}

/// Stores the resolved configuration next to the outputs so the run can be
/// replayed with `varnet run`.
fn persist(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let text = toml::to_string(cfg).context("serializing run configuration")?;
    write(dir, "run.toml", &text)
}

pub fn path_table(path: &PenaltyPath) -> String {
    let mut out = String::from("rho,df,bic,aic,stop_reason\n");
    for (k, est) in path.estimates.iter().enumerate() {
        let reason = if k + 1 == path.estimates.len() {
            path.stop_reason.name()
        } else {
            ""
        };
        let _ = writeln!(out, "{},{},{},{},{}", est.rho, est.df, est.bic, est.aic, reason);
    }
    out
}

pub fn infer_cmd(args: &InferArgs, cfg: &RunConfig) -> Result<()> {
    let text = io::read_to_string(&args.data)?;
    let (names, raw) = io::parse_data(&text)?;
    let x = standardize(&raw, Some(names.clone()), args.impute)?;
    let m = empirical_moments(&x)?;

    let classes = match &args.classes {
        Some(path) => {
            if args.penalty != Regime::Known {
                log::warn!("the classes file is only used by the known-class penalty");
            }
            let (z, unlisted) = io::parse_classes(&io::read_to_string(path)?, &names)?;
            if !unlisted.is_empty() {
                log::warn!("{} variables missing from the classes file default to leaf", unlisted.len());
            }
            Some(z)
        }
        None => None,
    };

    let icfg = args.selection.inference(args.penalty, args.criterion, args.seed);
    let fit = infer(&m, &icfg, classes.as_ref())?;
    let best = &fit.best;

    create_dir(&args.out)?;
    write(&args.out, "edges.csv", &io::format_edges(&names, &best.a_hat))?;
    write(&args.out, "adjacency.csv", &io::format_adjacency(&names, &best.a_hat))?;
    write(&args.out, "path.csv", &path_table(&fit.path))?;
    if let Some(z) = &fit.classes {
        write(&args.out, "classes.csv", &io::format_classes(&names, z))?;
    }
    if args.dot {
        write(&args.out, "network.dot", &io::format_dot(&names, &best.a_hat, fit.classes.as_ref()))?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "penalty = {}", args.penalty.name());
    let _ = writeln!(s, "criterion = {}", args.criterion.name());
    if args.penalty.needs_init() {
        let _ = writeln!(s, "init_criterion = {}", args.selection.init_criterion.name());
    }
    if matches!(args.penalty, Regime::Known | Regime::Inferred) {
        let _ = writeln!(s, "ratio = {}", args.selection.ratio);
        let _ = writeln!(s, "normalize = {}", args.selection.normalize);
    }
    let _ = writeln!(s, "variables = {}", m.p);
    let _ = writeln!(s, "transitions = {}", m.n);
    let _ = writeln!(s, "grid_size = {}", fit.path.grid.len());
    let _ = writeln!(s, "grid_max = {}", fit.path.grid.first().copied().unwrap_or(f64::NAN));
    let _ = writeln!(s, "grid_min = {}", fit.path.grid.last().copied().unwrap_or(f64::NAN));
    let _ = writeln!(s, "path_points = {}", fit.path.estimates.len());
    let _ = writeln!(s, "stop_reason = {}", fit.path.stop_reason.name());
    if let Some(e) = &fit.path.failure {
        let _ = writeln!(s, "path_failure = {e}");
    }
    let _ = writeln!(s, "chosen_rho = {}", best.rho);
    let _ = writeln!(s, "df = {}", best.df);
    let _ = writeln!(s, "bic = {}", best.bic);
    let _ = writeln!(s, "aic = {}", best.aic);
    let _ = writeln!(s, "null_selected = {}", fit.null_selected());
    if let Some(z) = &fit.classes {
        let source = match z.source {
            ClassSource::Known => "known",
            ClassSource::Inferred => "inferred",
        };
        let hubs: Vec<&str> = z.hubs().into_iter().map(|i| names[i].as_str()).collect();
        let _ = writeln!(s, "class_source = {source}");
        let _ = writeln!(s, "hubs = {}", hubs.join(" "));
        if z.degenerate {
            let _ = writeln!(s, "class_warning = degenerate initial estimate, all nodes labelled leaf");
        }
    }
    write(&args.out, "summary.txt", &s)?;
    persist(&args.out, cfg)?;

    if fit.null_selected() {
        log::info!("the null model was selected; the edge list is empty");
    }
    println!(
        "{}: {} edges at rho = {} ({} path points, {})",
        args.penalty.name(),
        best.df,
        best.rho,
        fit.path.estimates.len(),
        fit.path.stop_reason.name()
    );
    Ok(())
}

pub fn simulate_cmd(args: &SimulateArgs, cfg: &RunConfig) -> Result<()> {
    let sim = SimulationConfig {
        p: args.p,
        n: args.n,
        graph: GraphConfig {
            edges: args.edges,
            hub_prob: args.hub_prob,
            hub_to_leaf: args.hub_to_leaf,
        },
        sigma2: args.sigma2,
        stationary: !args.allow_explosive,
    };
    create_dir(&args.out)?;
    let width = args.replicates.saturating_sub(1).to_string().len();
    for r in 0..args.replicates {
        let inst = simulate_instance(&sim, args.seed, r as u64)?;
        let names = inst.x.names().to_vec();
        let tag = format!("rep{r:0width$}");
        write(&args.out, &format!("{tag}_data.csv"), &io::format_data(&names, inst.x.values()))?;
        write(&args.out, &format!("{tag}_truth.csv"), &io::format_edges(&names, &inst.a_true))?;
        write(&args.out, &format!("{tag}_classes.csv"), &io::format_classes(&names, &inst.classes))?;
    }
    persist(&args.out, cfg)?;
    println!("wrote {} replicates to {}", args.replicates, args.out.display());
    Ok(())
}

fn summary_cells(s: &Summary) -> String {
    format!("{},{},{}", opt(s.mean), opt(s.std_err), s.defined)
}

fn irrepresentability_sd(s: &Summary) -> Option<f64> {
    s.std_err.map(|se| se * (s.defined as f64).sqrt())
}

pub fn bench_cmd(args: &BenchArgs, cfg: &RunConfig) -> Result<()> {
    let bcfg = BenchConfig {
        seed: args.seed,
        inference: args.selection.inference(Regime::Lasso, Criterion::Bic, 0),
        stationary: !args.allow_explosive,
        include_diagonal: !args.off_diagonal,
        audit_only: args.audit_only,
        ..Default::default()
    };
    create_dir(&args.out)?;

    let mut metrics = String::from(
        "p,n,replicate,regime,criterion,tp,fp,tn,fn,precision,recall,fallout,df,rho,class_accuracy\n",
    );
    let mut summary = String::from(
        "p,n,regime,criterion,replicates,precision_mean,precision_se,precision_defined,recall_mean,recall_se,recall_defined,fallout_mean,fallout_se,fallout_defined,mean_df,null_selected,class_accuracy\n",
    );
    let mut irrep = String::from("p,n,replicates,defined,failing_mean,failing_se,failing_sd,failures\n");
    let mut reports: Vec<SettingReport> = Vec::new();

    for st in &args.settings {
        let setting = BenchSetting {
            p: st.p,
            n: st.n,
            replicates: st.replicates,
        };
        let rep = run_setting(&setting, &bcfg);
        for (r, msg) in &rep.failures {
            log::warn!("p={} n={} replicate {r}: {msg}", st.p, st.n);
        }
        for out in &rep.replicates {
            for m in &out.methods {
                let _ = writeln!(
                    metrics,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    st.p,
                    st.n,
                    out.replicate,
                    m.regime.name(),
                    m.criterion.name(),
                    m.counts.tp,
                    m.counts.fp,
                    m.counts.tn,
                    m.counts.fn_,
                    opt(m.rates.precision),
                    opt(m.rates.recall),
                    opt(m.rates.fallout),
                    m.df,
                    m.rho,
                    opt(m.class_accuracy)
                );
            }
        }
        for m in &rep.methods {
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{},{},{},{},{}",
                st.p,
                st.n,
                m.regime.name(),
                m.criterion.name(),
                m.rates.replicates,
                summary_cells(&m.rates.precision),
                summary_cells(&m.rates.recall),
                summary_cells(&m.rates.fallout),
                m.mean_df,
                m.null_selected,
                opt(m.class_accuracy.mean)
            );
        }
        let i = &rep.irrepresentability;
        let _ = writeln!(
            irrep,
            "{},{},{},{},{},{},{},{}",
            st.p,
            st.n,
            st.replicates,
            i.defined,
            opt(i.mean),
            opt(i.std_err),
            opt(irrepresentability_sd(i)),
            rep.failures.len()
        );
        reports.push(rep);
    }

    if !args.audit_only {
        write(&args.out, "metrics.csv", &metrics)?;
        write(&args.out, "summary.csv", &summary)?;
    }
    write(&args.out, "irrepresentability.csv", &irrep)?;
    persist(&args.out, cfg)?;
    print!("{}", bench_report(&reports));
    Ok(())
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "   -".to_string(), |v| format!("{v:.3}"))
}

fn bench_report(reports: &[SettingReport]) -> String {
    let mut out = String::new();
    for rep in reports {
        let st = rep.setting;
        let i = &rep.irrepresentability;
        let _ = writeln!(
            out,
            "p={} n={} replicates={} (failed {})",
            st.p,
            st.n,
            st.replicates,
            rep.failures.len()
        );
        let _ = writeln!(
            out,
            "  irrepresentability failing: {} (sd {}, {} defined)",
            cell(i.mean),
            cell(irrepresentability_sd(i)),
            i.defined
        );
        if rep.methods.is_empty() {
            continue;
        }
        let _ = writeln!(out, "  {:<9} {:<4} {:>9} {:>9} {:>9} {:>7} {:>5}", "regime", "crit", "precision", "recall", "fallout", "df", "null");
        for m in &rep.methods {
            let _ = writeln!(
                out,
                "  {:<9} {:<4} {:>9} {:>9} {:>9} {:>7.1} {:>5}",
                m.regime.name(),
                m.criterion.name(),
                cell(m.rates.precision.mean),
                cell(m.rates.recall.mean),
                cell(m.rates.fallout.mean),
                m.mean_df,
                m.null_selected
            );
        }
    }
    out
}

pub fn eval_cmd(args: &EvalArgs) -> Result<()> {
    let est_text = io::read_to_string(&args.estimate)?;
    let truth_text = io::read_to_string(&args.truth)?;
    let names = match &args.nodes {
        Some(path) => io::parse_data(&io::read_to_string(path)?)?.0,
        None => {
            let mut names = io::edge_names(&truth_text);
            for n in io::edge_names(&est_text) {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
            names
        }
    };
    let p = names.len();
    let estimate = io::parse_edges(&est_text, &names)?;
    let truth: Vec<_> = io::parse_edges(&truth_text, &names)?.into_iter().map(|(e, _)| e).collect();
    let mut a_hat = DMatrix::zeros(p, p);
    for ((i, j), w) in estimate {
        // a listed edge counts as present even with a zero or missing weight
        a_hat[(i, j)] = w.filter(|w| *w != 0.0).unwrap_or(1.0);
    }
    let c = confusion(&a_hat, &truth, !args.off_diagonal);
    let r: Rates = rates(&c);
    let text = format!(
        "nodes = {p}\ntp = {}\nfp = {}\ntn = {}\nfn = {}\nprecision = {}\nrecall = {}\nfallout = {}\n",
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        opt(r.precision),
        opt(r.recall),
        opt(r.fallout)
    );
    match &args.out {
        Some(path) => io::write_string(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
