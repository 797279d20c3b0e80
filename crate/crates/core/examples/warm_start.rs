//! Estimating the safe action's reward and cost gaps before running, when
//! they are not known in advance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution};

use stagewise::estimation::warm_start;

fn main() -> stagewise::Result<()> {
    let (r0, c0, tau, delta, horizon) = (0.3, 0.2, 0.6, 0.05, 100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (br, bc) = (Bernoulli::new(r0).unwrap(), Bernoulli::new(c0).unwrap());
    let ws = warm_start(
        || {
            (
                f64::from(u8::from(br.sample(&mut rng))),
                f64::from(u8::from(bc.sample(&mut rng))),
            )
        },
        tau,
        delta,
        horizon,
    )?;
    println!(
        "safe pulls: {} (reward rule {}, cost rule {})",
        ws.rounds(),
        ws.reward_stop,
        ws.cost_stop
    );
    println!(
        "reward gap {:.3} (true {:.3}), cost gap {:.3} (true {:.3})",
        ws.reward_gap,
        1.0 - r0,
        ws.cost_gap,
        tau - c0
    );
    let a = ws.alphas();
    println!("scaling: alpha_r {:.3}, alpha_c {:?}", a.alpha_r, a.alpha_c);
    Ok(())
}
