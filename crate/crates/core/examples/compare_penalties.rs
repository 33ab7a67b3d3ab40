//! Simulates a few hub networks and compares the four penalty regimes.
//!
//! cargo run --release -p varnet-core --example compare_penalties -- [p] [n] [replicates]

use varnet::prelude::*;

fn main() -> Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let p = args.first().copied().unwrap_or(20);
    let n = args.get(1).copied().unwrap_or(40);
    let reps = args.get(2).copied().unwrap_or(10);

    let regimes = [Regime::Lasso, Regime::Adaptive, Regime::Known, Regime::Inferred];
    let mut totals = vec![(0.0, 0usize, 0.0); regimes.len()];
    for r in 0..reps as u64 {
        let inst = simulate_instance(&SimulationConfig::new(p, n), 7, r)?;
        let m = empirical_moments(&inst.x)?;
        for (k, &regime) in regimes.iter().enumerate() {
            let fit = infer(&m, &InferenceConfig::for_regime(regime), Some(&inst.classes))?;
            let rt = rates(&confusion(&fit.best.a_hat, &inst.edges, true));
            if let Some(prec) = rt.precision {
                totals[k].0 += prec;
                totals[k].1 += 1;
            }
            totals[k].2 += rt.recall.unwrap_or(0.0);
        }
    }

    println!("p = {p}, n = {n}, {reps} replicates");
    println!("{:<10}{:>10}{:>10}", "penalty", "precision", "recall");
    for (regime, (prec, defined, rec)) in regimes.iter().zip(totals) {
        let prec = if defined > 0 { format!("{:.3}", prec / defined as f64) } else { "NA".into() };
        println!("{:<10}{:>10}{:>10.3}", regime.name(), prec, rec / reps as f64);
    }
    Ok(())
}
