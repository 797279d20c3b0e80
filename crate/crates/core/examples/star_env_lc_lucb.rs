//! LC-LUCB driven by hand on the star-shaped instance: pick a point from the
//! pessimistically feasible part of the set, observe noisy feedback, update.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stagewise::confidence::{AlphaMode, ConfidenceSpec};
use stagewise::environments::{make_star_env, ActionSet};
use stagewise::lc_lucb::{LcLucb, LcLucbConfig};

fn main() -> stagewise::Result<()> {
    let (d, tau, horizon) = (5, 0.5, 5_000);
    let env = make_star_env(d, tau, 0.1)?;
    let ActionSet::Star(set) = &env.actions else {
        unreachable!()
    };
    let best = env.star_oracle(set);

    // The safe action is the origin, so r0 = c0 = 0 and the gap is tau.
    let spec = ConfidenceSpec {
        noise: 0.1,
        ..ConfidenceSpec::default()
    }
    .with_auto_alphas(0.0, tau, AlphaMode::HighProb)?;
    let mut alg = LcLucb::new(LcLucbConfig::new(
        spec,
        env.safe_action().clone(),
        env.safe_costs(),
        vec![tau],
    ))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut regret, mut violations) = (0.0, 0);
    for t in 1..=horizon {
        let x = alg.step(set)?.choice.point;
        regret += best.value - env.mean_reward(&x);
        if env.mean_costs(&x)[0] > tau + 1e-9 {
            violations += 1;
        }
        let (r, c) = env.sample(&x, &mut rng)?;
        alg.update(&x, r, &c)?;
        if t % 1000 == 0 {
            println!("t={t:5}  regret={regret:8.2}  violations={violations}");
        }
    }
    println!("oracle value {:.4}, alpha_r {}", best.value, spec.alpha_r);
    Ok(())
}
