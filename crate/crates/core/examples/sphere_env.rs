//! LC-LUCB against the safe Thompson-sampling baseline on random sphere
//! instances.

use stagewise::harness::{run_experiment, ExperimentConfig};

fn main() -> stagewise::Result<()> {
    for d in [3, 5] {
        for name in ["lc_lucb", "safe_ts_baseline"] {
            let cfg = ExperimentConfig::parse(&format!(
                "[algorithm]\nname = {name}\nhorizon = 5000\nseeds = 0..4\n\
                 [environment]\nkind = sphere\nd = {d}\nn_rays = 50\n"
            ))?;
            let s = run_experiment(&cfg, None)?.summary;
            println!(
                "d={d} {name:>17}: regret {:8.1} ± {:6.1}, violation rate {:.4}",
                s.final_regret_mean, s.final_regret_std, s.violation_rate
            );
        }
    }
    Ok(())
}
