//! The pair of lower-bound instances: they differ in one arm only, which is
//! what makes them hard to tell apart.

use stagewise::environments::{make_lower_bound_env, LowerBoundVariant};
use stagewise::harness::{run_experiment, ExperimentConfig};

fn main() -> stagewise::Result<()> {
    let (arms, tau, c0, r0) = (4, 0.5, 0.1, 0.2);
    for (variant, key) in [(LowerBoundVariant::Nu, "nu"), (LowerBoundVariant::NuPrime, "nu_prime")] {
        let env = make_lower_bound_env(arms, tau, c0, r0, variant)?;
        let oracle = env.oracle()?;
        let cfg = ExperimentConfig::parse(&format!(
            "[algorithm]\nname = opb\nhorizon = 20000\nseeds = 0..4\n\
             [environment]\nkind = lower_bound\narms = {arms}\ntau = {tau}\nc0 = {c0}\nr0 = {r0}\nvariant = {key}\n"
        ))?;
        let s = run_experiment(&cfg, None)?.summary;
        println!(
            "{key:>8}: means {:.3?}, costs {:.3?}, oracle {:.4} on {:?}, OPB regret {:.1}",
            env.rbar, env.cbar[0], oracle.value, oracle.policy.support, s.final_regret_mean
        );
    }
    Ok(())
}
