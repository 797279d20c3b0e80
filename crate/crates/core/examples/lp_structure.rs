//! The simplex LP behind the expectation algorithms: with m cost constraints
//! an optimal policy needs at most m + 1 arms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stagewise::lp_solver::{solve_generic, solve_support2, solve_support_m1, SimplexLp};

fn main() -> stagewise::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 1..=3 {
        let arms = 8;
        let reward: Vec<f64> = (0..arms).map(|_| rng.random()).collect();
        let mut cost: Vec<Vec<f64>> = (0..m).map(|_| (0..arms).map(|_| rng.random()).collect()).collect();
        for row in cost.iter_mut() {
            row[0] = 0.05;
        }
        let lp = SimplexLp::new(reward, cost, vec![0.4; m])?;
        let sparse = if m == 1 {
            solve_support2(&lp)?
        } else {
            solve_support_m1(&lp)?
        };
        let dense = solve_generic(&lp)?;
        println!(
            "m={m}: value {:.6} (simplex {:.6}), support {:?} weights {:.3?}",
            sparse.value, dense.value, sparse.policy.support, sparse.policy.weights
        );
    }
    Ok(())
}
