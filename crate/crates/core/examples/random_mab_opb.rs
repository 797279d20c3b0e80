//! OPB on random multi-armed instances, compared with the problem-dependent
//! regret bound of each instance.

use stagewise::harness::{run_experiment, ExperimentConfig};

fn main() -> stagewise::Result<()> {
    println!(
        "{:>4} {:>5} {:>10} {:>12} {:>6}",
        "K", "tau", "regret", "bound", "clean"
    );
    for arms in [5, 10, 20] {
        for tau in [0.2, 0.5, 0.8] {
            let cfg = ExperimentConfig::parse(&format!(
                "[algorithm]\nname = opb\nhorizon = 10000\nseeds = 0..4\n\
                 [environment]\nkind = mab\npreset = random\narms = {arms}\ntau = {tau}\n"
            ))?;
            let s = run_experiment(&cfg, None)?.summary;
            println!(
                "{arms:>4} {tau:>5} {:>10.1} {:>12.1} {:>6}",
                s.final_regret_mean,
                s.theorem_bound_value.unwrap_or(f64::NAN),
                s.clean_seeds
            );
        }
    }
    Ok(())
}
