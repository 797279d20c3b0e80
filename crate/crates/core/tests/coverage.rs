//! Empirical coverage of the reward and cost confidence ellipsoids.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use stagewise::confidence::{ConfidenceSpec, DeltaAllocation};
use stagewise::estimation::{CostModel, LinearState};
use stagewise::lc_lucb::LinearValues;
use stagewise::linalg::Vector;

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    let v = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
    let n = v.norm();
    v / n
}

/// One run: true parameters, a random action stream and a check that both
/// sets contain the truth at every round.
fn covered(seed: u64, spec: &ConfidenceSpec, d: usize, horizon: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = unit(&mut rng, d) * 0.9;
    let mu = unit(&mut rng, d) * 0.9;
    let x0 = unit(&mut rng, d) * 0.3;
    let c0 = x0.dot(&mu);
    let noise = Normal::new(0.0, spec.noise).unwrap();
    let mut state = LinearState::new(&x0, &[c0], spec.ridge, CostModel::Projected).unwrap();

    // Direct ridge regression for the reward, kept independently of the state.
    let mut gram = DMatrix::<f64>::identity(d, d) * spec.ridge;
    let mut xty = Vector::zeros(d);

    for _ in 0..horizon {
        let v = LinearValues::new(&state, spec, DeltaAllocation::PassThrough).unwrap();
        if !v.reward_in_set(&state, &theta) || !v.cost_in_set(&state, &mu, 0) {
            return false;
        }
        let direct = gram.clone().try_inverse().unwrap() * &xty;
        assert!((direct - &v.est.theta_hat).amax() < 1e-8);

        let x = unit(&mut rng, d) * rng.random_range(0.0..1.0);
        let r = x.dot(&theta) + noise.sample(&mut rng);
        let c = x.dot(&mu) + noise.sample(&mut rng);
        state.update(&x, r, &[c]).unwrap();
        gram += &x * x.transpose();
        xty += &x * r;
    }
    true
}

#[test]
fn confidence_sets_cover_the_truth() {
    let spec = ConfidenceSpec {
        noise: 0.1,
        delta: 0.05,
        ..ConfidenceSpec::default()
    };
    let runs = 500;
    let hits = (0..runs).filter(|&s| covered(s, &spec, 4, 200)).count();
    let rate = hits as f64 / runs as f64;
    assert!(rate >= 1.0 - spec.delta, "coverage {rate}");
}
