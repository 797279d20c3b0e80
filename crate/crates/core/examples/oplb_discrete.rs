//! OPLB on a small finite action set in the plane. The optimal policy mixes
//! two actions so its expected cost meets the threshold exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stagewise::confidence::{AlphaMode, ConfidenceSpec};
use stagewise::environments::{ActionSet, LinearEnv, Noise};
use stagewise::expectation::{Oplb, OplbConfig};
use stagewise::geometry::DiscreteSet;
use stagewise::linalg::vector;

fn main() -> stagewise::Result<()> {
    let actions = vec![
        vector(&[0.1, 0.0]),
        vector(&[1.0, 0.0]),
        vector(&[0.0, 1.0]),
        vector(&[0.6, 0.6]),
    ];
    let set = DiscreteSet::new(actions, 0)?;
    let tau = 0.35;
    let env = LinearEnv::new(
        vector(&[0.5, 0.8]),
        vec![vector(&[0.2, 0.6])],
        vec![tau],
        ActionSet::Discrete(set.clone()),
        Noise::Gaussian { sigma: 0.1 },
    )?;
    let oracle = env.policy_oracle(&set)?;
    println!(
        "optimal policy {:?} weights {:?}, value {:.4}",
        oracle.policy.support, oracle.policy.weights, oracle.value
    );

    let (r0, c0) = (env.safe_reward(), env.safe_costs());
    let spec = ConfidenceSpec {
        noise: 0.1,
        ..ConfidenceSpec::default()
    }
    .with_auto_alphas(r0, tau - c0[0], AlphaMode::Expectation)?;
    let mut alg = Oplb::new(env.safe_action(), OplbConfig::new(spec, c0, vec![tau]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut regret = 0.0;
    for t in 1..=4000 {
        let step = alg.step(&set, &mut rng)?;
        let x = &set.actions[step.action];
        regret += oracle.value
            - step
                .policy
                .expectation(&set.actions.iter().map(|a| env.mean_reward(a)).collect::<Vec<_>>());
        let (r, c) = env.sample(x, &mut rng)?;
        alg.update(x, r, &c)?;
        if t % 1000 == 0 {
            println!(
                "t={t}  regret={regret:.2}  policy {:?} {:?}",
                step.policy.support, step.policy.weights
            );
        }
    }
    Ok(())
}
