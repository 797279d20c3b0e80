//! OPB on the four-arm instance at two thresholds. The tight threshold forces
//! a mixture whose expected cost sits on the constraint.

use stagewise::harness::{run_experiment, ExperimentConfig};

fn main() -> stagewise::Result<()> {
    for tau in [0.8, 0.2] {
        let cfg = ExperimentConfig::parse(&format!(
            "[algorithm]\nname = opb\nhorizon = 20000\nseeds = 0..4\n\
             [environment]\nkind = mab\npreset = four_arm\ntau = {tau}\n"
        ))?;
        let exp = run_experiment(&cfg, None)?;
        let curve = exp.curve();
        let tail = curve.cost_mean[0].len() * 4 / 5;
        let late_cost = curve.cost_mean[0][tail..].iter().sum::<f64>() / (curve.cost_mean[0].len() - tail) as f64;
        println!(
            "tau={tau}: regret {:.1} ± {:.1}, oracle {:.3}, late expected cost {late_cost:.4}, violation rate {}",
            exp.summary.final_regret_mean,
            exp.summary.final_regret_std,
            exp.results[0].oracle_value,
            exp.summary.violation_rate
        );
    }
    Ok(())
}
