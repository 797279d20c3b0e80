//! OPNLB on a random finite function class. Prints the regret at a few
//! checkpoints of a single anytime run.

use stagewise::harness::{run_experiment, ExperimentConfig};

fn main() -> stagewise::Result<()> {
    let cfg = ExperimentConfig::parse(
        "[algorithm]\nname = opnlb\nhorizon = 4000\nseeds = 0..4\n\
         [environment]\nkind = finite_class\nfunctions = 16\nactions = 8\nc0 = 0.2\ntau = 0.5\n",
    )?;
    let exp = run_experiment(&cfg, None)?;
    let curve = exp.curve();
    for t in [250, 500, 1000, 2000, 4000] {
        println!(
            "T={t:5}  regret {:8.2} ± {:.2}",
            curve.regret_mean[t - 1],
            curve.regret_std[t - 1]
        );
    }
    println!(
        "oracle {:.4}, violation rate {}",
        exp.results[0].oracle_value, exp.summary.violation_rate
    );
    Ok(())
}
