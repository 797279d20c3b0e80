//! Online estimators: ridge regression with a projected cost estimator, per-arm
//! empirical means, least squares over a finite function class, and the
//! warm-start routine for an unknown safe action.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, project_safe, Factor, PsdMatrix, Vector};
use crate::nonlinear::FunctionClass;

/// How the cost parameter is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CostModel {
    /// Estimate only the component orthogonal to the safe direction and use the
    /// known safe cost along it.
    #[default]
    Projected,
    /// Estimate the cost parameter in every direction (safe cost unknown).
    Full,
}

/// Ridge-regression state for the reward parameter and, per constraint, the
/// cost parameter restricted to the complement of the safe direction.
#[derive(Clone, Debug)]
pub struct LinearState {
    lambda: f64,
    sigma: PsdMatrix,
    b_r: Vector,
    e0: Option<Vector>,
    norm_x0: f64,
    c0: Vec<f64>,
    sigma_perp: PsdMatrix,
    b_c: Vec<Vector>,
    t: usize,
}

/// Estimates and factorizations for one round, computed once and reused for
/// every value evaluation in that round.
pub struct Estimates {
    pub theta_hat: Vector,
    pub mu_perp: Vec<Vector>,
    reward_factor: Factor,
    perp_factor: Factor,
}

impl Estimates {
    /// `‖x‖_{Σ⁻¹}`.
    pub fn reward_width(&self, x: &Vector) -> f64 {
        self.reward_factor.inv_norm(x)
    }

    /// `‖x_perp‖_{(Σ_perp)^†}` for `x_perp` orthogonal to the safe direction.
    pub fn cost_width(&self, x_perp: &Vector) -> f64 {
        self.perp_factor.inv_norm(x_perp)
    }

    pub fn reward_factor(&self) -> &Factor {
        &self.reward_factor
    }
}

impl LinearState {
    /// `c0` holds one known safe cost per constraint. With a zero safe action
    /// or [`CostModel::Full`] the projection is disabled and the safe costs are
    /// not used.
    pub fn new(x0: &Vector, c0: &[f64], lambda: f64, model: CostModel) -> Result<Self> {
        let d = x0.len();
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("ridge must be positive, got {lambda}")));
        }
        if c0.is_empty() {
            return Err(Error::invalid("at least one cost constraint is required"));
        }
        let norm_x0 = x0.norm();
        let e0 = match model {
            CostModel::Projected if norm_x0 > 0.0 => Some(x0 / norm_x0),
            _ => None,
        };
        let mut perp = nalgebra::DMatrix::identity(d, d) * lambda;
        if let Some(e0) = &e0 {
            perp.ger(-lambda, e0, e0, 1.0);
        }
        Ok(Self {
            lambda,
            sigma: PsdMatrix::scaled_identity(d, lambda),
            b_r: Vector::zeros(d),
            e0,
            norm_x0,
            c0: c0.to_vec(),
            sigma_perp: PsdMatrix::from_matrix(perp)?,
            b_c: vec![Vector::zeros(d); c0.len()],
            t: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b_r.len()
    }

    pub fn constraints(&self) -> usize {
        self.c0.len()
    }

    /// Number of observations absorbed so far.
    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn safe_direction(&self) -> Option<&Vector> {
        self.e0.as_ref()
    }

    pub fn safe_costs(&self) -> &[f64] {
        &self.c0
    }

    pub fn sigma(&self) -> &PsdMatrix {
        &self.sigma
    }

    pub fn sigma_perp(&self) -> &PsdMatrix {
        &self.sigma_perp
    }

    /// Dimension used by the cost radius: `d − 1` when projecting, else `d`.
    pub fn cost_dim(&self) -> usize {
        if self.e0.is_some() {
            (self.dim() - 1).max(1)
        } else {
            self.dim()
        }
    }

    /// Known cost along the safe direction, `⟨x, e₀⟩ c₀ / ‖x₀‖`.
    pub fn safe_cost_component(&self, x: &Vector, constraint: usize) -> f64 {
        match &self.e0 {
            Some(e0) => x.dot(e0) * self.c0[constraint] / self.norm_x0,
            None => 0.0,
        }
    }

    pub fn update(&mut self, x: &Vector, reward: f64, costs: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.constraints(), costs.len())?;
        self.sigma.rank_one_update(x)?;
        self.b_r.axpy(reward, x, 1.0);
        let (_, x_perp) = project_safe(x, self.e0.as_ref());
        self.sigma_perp.rank_one_update(&x_perp)?;
        for (i, &c) in costs.iter().enumerate() {
            let c_perp = c - self.safe_cost_component(x, i);
            self.b_c[i].axpy(c_perp, &x_perp, 1.0);
        }
        self.t += 1;
        Ok(())
    }

    pub fn estimates(&self) -> Result<Estimates> {
        let reward_factor = self.sigma.factor()?;
        let augmented = crate::linalg::augment_perp(&self.sigma_perp, self.e0.as_ref(), self.lambda)?;
        let perp_factor = augmented.factor()?;
        let theta_hat = reward_factor.solve(&self.b_r);
        let mu_perp = self.b_c.iter().map(|b| perp_factor.solve(b)).collect();
        Ok(Estimates {
            theta_hat,
            mu_perp,
            reward_factor,
            perp_factor,
        })
    }
}

/// What an unpulled non-safe arm contributes to the upper confidence bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UnpulledArmPolicy {
    /// Zero empirical means with the radius of a single pull. Still a valid
    /// upper bound since that radius exceeds 1 for any `δ′ < 1/e`.
    #[default]
    ClampedCount,
    /// Infinite reward and cost bounds; such arms never enter a feasible mixture.
    Sentinel,
    /// Zero means and zero radius, the literal reading of `β_a(0) = 0`.
    ZeroMeanZeroRadius,
}

/// Per-arm pull counts and running sums for the multi-armed algorithms.
#[derive(Clone, Debug)]
pub struct MabState {
    counts: Vec<u64>,
    reward_sums: Vec<f64>,
    /// `cost_sums[i][a]` for constraint `i`.
    cost_sums: Vec<Vec<f64>>,
    safe_arm: usize,
    safe_reward: f64,
    safe_costs: Vec<f64>,
}

/// Upper confidence bounds; `cost[i][a]` is arm `a` under constraint `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MabUcbs {
    pub reward: Vec<f64>,
    pub cost: Vec<Vec<f64>>,
}

impl MabState {
    pub fn new(arms: usize, safe_arm: usize, safe_reward: f64, safe_costs: &[f64]) -> Result<Self> {
        if arms == 0 || safe_arm >= arms {
            return Err(Error::invalid(format!(
                "safe arm {safe_arm} out of range for {arms} arms"
            )));
        }
        if safe_costs.is_empty() {
            return Err(Error::invalid("at least one cost constraint is required"));
        }
        Ok(Self {
            counts: vec![0; arms],
            reward_sums: vec![0.0; arms],
            cost_sums: vec![vec![0.0; arms]; safe_costs.len()],
            safe_arm,
            safe_reward,
            safe_costs: safe_costs.to_vec(),
        })
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn constraints(&self) -> usize {
        self.safe_costs.len()
    }

    pub fn safe_arm(&self) -> usize {
        self.safe_arm
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn mean_reward(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.reward_sums[arm] / self.counts[arm] as f64)
    }

    pub fn mean_cost(&self, arm: usize, constraint: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.cost_sums[constraint][arm] / self.counts[arm] as f64)
    }

    pub fn update(&mut self, arm: usize, reward: f64, costs: &[f64]) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::invalid(format!("arm {arm} out of range")));
        }
        check_dim(self.constraints(), costs.len())?;
        self.counts[arm] += 1;
        self.reward_sums[arm] += reward;
        for (i, &c) in costs.iter().enumerate() {
            self.cost_sums[i][arm] += c;
        }
        Ok(())
    }

    /// `u^r_a = r̂_a + α_r β_a`, `u^c_a = ĉ_a + α_c β_a` with
    /// `β_a = √(2 log(1/δ′) / T_a)`. The safe arm reports its known means.
    /// Bounds are not clipped to `[0, 1]`.
    pub fn ucbs(&self, alpha_r: f64, alpha_c: f64, delta_prime: f64, policy: UnpulledArmPolicy) -> MabUcbs {
        let k = self.arms();
        let m = self.constraints();
        let mut reward = vec![0.0; k];
        let mut cost = vec![vec![0.0; k]; m];
        for a in 0..k {
            if a == self.safe_arm {
                reward[a] = self.safe_reward;
                for i in 0..m {
                    cost[i][a] = self.safe_costs[i];
                }
                continue;
            }
            let n = self.counts[a];
            let (r_hat, radius, c_hat): (f64, f64, Vec<f64>) = if n > 0 {
                let inv = 1.0 / n as f64;
                (
                    self.reward_sums[a] * inv,
                    crate::confidence::mab_radius(n, delta_prime),
                    (0..m).map(|i| self.cost_sums[i][a] * inv).collect(),
                )
            } else {
                match policy {
                    UnpulledArmPolicy::ClampedCount => {
                        (0.0, crate::confidence::mab_radius(1, delta_prime), vec![0.0; m])
                    }
                    UnpulledArmPolicy::Sentinel => (0.0, f64::INFINITY, vec![0.0; m]),
                    UnpulledArmPolicy::ZeroMeanZeroRadius => (0.0, 0.0, vec![0.0; m]),
                }
            };
            reward[a] = r_hat + alpha_r * radius;
            for i in 0..m {
                cost[i][a] = c_hat[i] + alpha_c * radius;
            }
        }
        MabUcbs { reward, cost }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Reward,
    Cost,
}

/// Dataset statistics for least squares over finite reward and cost classes.
#[derive(Clone, Debug)]
pub struct FiniteClassState {
    reward_class: FunctionClass,
    cost_class: FunctionClass,
    counts: Vec<u64>,
    reward_loss: Vec<f64>,
    cost_loss: Vec<f64>,
    dataset: Vec<(usize, f64, f64)>,
}

impl FiniteClassState {
    pub fn new(reward_class: FunctionClass, cost_class: FunctionClass) -> Result<Self> {
        if reward_class.actions() != cost_class.actions() {
            return Err(Error::DimensionMismatch {
                expected: reward_class.actions(),
                found: cost_class.actions(),
            });
        }
        Ok(Self {
            counts: vec![0; reward_class.actions()],
            reward_loss: vec![0.0; reward_class.len()],
            cost_loss: vec![0.0; cost_class.len()],
            reward_class,
            cost_class,
            dataset: Vec::new(),
        })
    }

    pub fn class(&self, which: Target) -> &FunctionClass {
        match which {
            Target::Reward => &self.reward_class,
            Target::Cost => &self.cost_class,
        }
    }

    pub fn rounds(&self) -> usize {
        self.dataset.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Observations in arrival order as `(action, reward, cost)`.
    pub fn dataset(&self) -> &[(usize, f64, f64)] {
        &self.dataset
    }

    pub fn losses(&self, which: Target) -> &[f64] {
        match which {
            Target::Reward => &self.reward_loss,
            Target::Cost => &self.cost_loss,
        }
    }

    pub fn update(&mut self, action: usize, reward: f64, cost: f64) -> Result<()> {
        if action >= self.counts.len() {
            return Err(Error::invalid(format!("action {action} out of range")));
        }
        self.counts[action] += 1;
        for (f, loss) in self.reward_loss.iter_mut().enumerate() {
            let e = self.reward_class.value(f, action) - reward;
            *loss += e * e;
        }
        for (f, loss) in self.cost_loss.iter_mut().enumerate() {
            let e = self.cost_class.value(f, action) - cost;
            *loss += e * e;
        }
        self.dataset.push((action, reward, cost));
        Ok(())
    }

    /// Empirical squared-loss minimizer; ties go to the lowest function id.
    pub fn least_squares(&self, which: Target) -> usize {
        let losses = self.losses(which);
        let mut best = 0;
        for (f, &l) in losses.iter().enumerate().skip(1) {
            if l < losses[best] {
                best = f;
            }
        }
        best
    }

    /// `‖f − g‖²_{D_t} = Σ_{x∈D_t} (f(x) − g(x))²`.
    pub fn dataset_sq_dist(&self, which: Target, f: usize, g: usize) -> f64 {
        let class = self.class(which);
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(a, &n)| {
                let diff = class.value(f, a) - class.value(g, a);
                n as f64 * diff * diff
            })
            .sum()
    }
}

/// Outcome of playing the safe action until both gaps are estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarmStart {
    /// `1 − r̂₀(T0_r)`.
    pub reward_gap: f64,
    /// `τ − ĉ₀(T0_c)`.
    pub cost_gap: f64,
    pub reward_stop: usize,
    pub cost_stop: usize,
    pub reward_estimate: f64,
    pub cost_estimate: f64,
}

impl WarmStart {
    /// Rounds spent on the safe action.
    pub fn rounds(&self) -> usize {
        self.reward_stop.max(self.cost_stop)
    }

    /// Scaling parameters from the estimated gaps. On the clean event the gaps
    /// are within a factor of 2 (resp. 3/2) of the truth, so
    /// `α_r = 1 + 6 Δ̂_r / Δ̂_c` with `α_c = 1` dominates the known-gap choice.
    pub fn alphas(&self) -> crate::confidence::ScalingParams {
        crate::confidence::ScalingParams {
            alpha_r: 1.0 + 6.0 * self.reward_gap / self.cost_gap,
            alpha_c: Some(1.0),
        }
    }
}

/// Radius used by both stopping rules, `3 √(2 log(2T/δ) / t)`.
pub fn warm_start_radius(t: usize, delta: f64, horizon: usize) -> f64 {
    3.0 * (2.0 * (2.0 * horizon as f64 / delta).ln() / t as f64).sqrt()
}

/// Pulls the safe action through `feedback` (returning `(reward, cost)`) until
///  `ĉ₀(t) + rad(t) ≤ τ` and `r̂₀(t) + rad(t) ≤ 1` have both triggered.
pub fn warm_start(mut feedback: impl FnMut() -> (f64, f64), tau: f64, delta: f64, horizon: usize) -> Result<WarmStart> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut reward_sum = 0.0;
    let mut cost_sum = 0.0;
    let mut reward_stop: Option<(usize, f64)> = None;
    let mut cost_stop: Option<(usize, f64)> = None;
    for t in 1..=horizon {
        let (r, c) = feedback();
        if reward_stop.is_none() {
            reward_sum += r;
        }
        if cost_stop.is_none() {
            cost_sum += c;
        }
        let rad = warm_start_radius(t, delta, horizon);
        if cost_stop.is_none() {
            let c_hat = cost_sum / t as f64;
            if c_hat + rad <= tau {
                cost_stop = Some((t, c_hat));
            }
        }
        if reward_stop.is_none() {
            let r_hat = reward_sum / t as f64;
            if r_hat + rad <= 1.0 {
                reward_stop = Some((t, r_hat));
            }
        }
        if let (Some((tr, r_hat)), Some((tc, c_hat))) = (reward_stop, cost_stop) {
            return Ok(WarmStart {
                reward_gap: 1.0 - r_hat,
                cost_gap: tau - c_hat,
                reward_stop: tr,
                cost_stop: tc,
                reward_estimate: r_hat,
                cost_estimate: c_hat,
            });
        }
    }
    Err(Error::HorizonExhausted { horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vector {
        let v = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        v / n
    }

    #[test]
    fn ridge_shrinkage_closed_form() {
        let mut s = LinearState::new(&vector(&[0.0, 0.0]), &[0.0], 1.0, CostModel::Projected).unwrap();
        let x = vector(&[1.0, 0.0]);
        for _ in 0..50 {
            s.update(&x, 1.0, &[0.0]).unwrap();
        }
        let est = s.estimates().unwrap();
        assert!((est.theta_hat[0] - 50.0 / 51.0).abs() < 1e-14);
        assert_eq!(est.theta_hat[1], 0.0);
    }

    #[test]
    fn zero_safe_action_keeps_raw_cost() {
        let mut s = LinearState::new(&vector(&[0.0, 0.0]), &[0.3], 1.0, CostModel::Projected).unwrap();
        assert!(s.safe_direction().is_none());
        assert_eq!(s.cost_dim(), 2);
        s.update(&vector(&[0.0, 1.0]), 0.0, &[0.7]).unwrap();
        let est = s.estimates().unwrap();
        assert!((est.mu_perp[0][1] - 0.35).abs() < 1e-14);
    }

    #[test]
    fn empty_state_estimates_are_zero() {
        let s = LinearState::new(&vector(&[1.0, 0.0, 0.0]), &[0.2], 1.0, CostModel::Projected).unwrap();
        let est = s.estimates().unwrap();
        assert_eq!(est.theta_hat, Vector::zeros(3));
        assert_eq!(est.mu_perp[0], Vector::zeros(3));
    }

    #[test]
    fn one_dimensional_perp_estimate() {
        // One observation along e₂ with cost c: the scalar ridge estimate is c/(1+λ).
        let mut s = LinearState::new(&vector(&[0.5, 0.0, 0.0]), &[0.1], 1.0, CostModel::Projected).unwrap();
        s.update(&vector(&[0.0, 1.0, 0.0]), 0.0, &[0.6]).unwrap();
        let est = s.estimates().unwrap();
        assert!((est.mu_perp[0][1] - 0.3).abs() < 1e-14);
        assert!(est.mu_perp[0][0].abs() < 1e-14);
        assert!((est.cost_width(&vector(&[0.0, 1.0, 0.0])) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn safe_component_is_removed_from_cost() {
        // x₀ = (2, 0) with c₀ = 0.4: playing x = (1, 1) has known part 0.2.
        let mut s = LinearState::new(&vector(&[2.0, 0.0]), &[0.4], 1.0, CostModel::Projected).unwrap();
        assert!((s.safe_cost_component(&vector(&[1.0, 1.0]), 0) - 0.2).abs() < 1e-15);
        s.update(&vector(&[1.0, 1.0]), 0.0, &[0.7]).unwrap();
        let est = s.estimates().unwrap();
        assert!((est.mu_perp[0][1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn theta_matches_batch_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 4;
        let x0 = random_unit(&mut rng, d) * 0.5;
        let mut s = LinearState::new(&x0, &[0.1], 0.7, CostModel::Projected).unwrap();
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..40 {
            let x = random_unit(&mut rng, d);
            let y: f64 = rng.random_range(-1.0..1.0);
            s.update(&x, y, &[0.0]).unwrap();
            rows.push(x);
            ys.push(y);
        }
        let design = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let y = Vector::from_vec(ys);
        let gram = design.transpose() * &design + DMatrix::identity(d, d) * 0.7;
        let rhs = design.transpose() * y;
        let oracle = gram.try_inverse().unwrap() * rhs;
        let est = s.estimates().unwrap();
        assert!((est.theta_hat - oracle).amax() < 1e-9);
    }

    proptest! {
        #[test]
        fn mu_perp_orthogonal_to_safe_direction(seed in 0u64..1_000_000, n in 0usize..30, d in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = random_unit(&mut rng, d) * rng.random_range(0.1..1.0);
            let mut s = LinearState::new(&x0, &[0.1, 0.2], 1.0, CostModel::Projected).unwrap();
            for _ in 0..n {
                let x = random_unit(&mut rng, d);
                s.update(&x, rng.random(), &[rng.random(), rng.random()]).unwrap();
            }
            let e0 = s.safe_direction().unwrap().clone();
            let est = s.estimates().unwrap();
            for mu in &est.mu_perp {
                prop_assert!(mu.dot(&e0).abs() < 1e-8);
            }
            prop_assert!((s.sigma_perp().as_matrix() * &e0).amax() < 1e-10);
        }
    }

    #[test]
    fn mab_safe_arm_uses_known_values() {
        let s = MabState::new(3, 0, 0.1, &[0.05]).unwrap();
        let u = s.ucbs(2.0, 1.0, 0.01, UnpulledArmPolicy::Sentinel);
        assert_eq!(u.reward[0], 0.1);
        assert_eq!(u.cost[0][0], 0.05);
        assert_eq!(u.reward[1], f64::INFINITY);
    }

    #[test]
    fn mab_radius_example() {
        let mut s = MabState::new(2, 0, 0.0, &[0.0]).unwrap();
        s.update(1, 1.0, &[0.2]).unwrap();
        s.update(1, 0.0, &[0.4]).unwrap();
        let u = s.ucbs(1.0, 1.0, 0.1, UnpulledArmPolicy::default());
        let expected = 0.5 + 10f64.ln().sqrt();
        assert!((u.reward[1] - expected).abs() < 1e-14);
        assert!((u.reward[1] - 2.017).abs() < 1e-3);
        assert!((u.cost[0][1] - (0.3 + 10f64.ln().sqrt())).abs() < 1e-14);
    }

    #[test]
    fn mab_hand_table() {
        let mut s = MabState::new(3, 2, 0.3, &[0.1]).unwrap();
        s.update(0, 0.8, &[0.6]).unwrap();
        s.update(1, 0.4, &[0.2]).unwrap();
        s.update(2, 0.9, &[0.9]).unwrap();
        let dp = 0.05;
        let beta = (2.0 * 20f64.ln()).sqrt();
        let u = s.ucbs(3.0, 1.0, dp, UnpulledArmPolicy::ClampedCount);
        assert!((u.reward[0] - (0.8 + 3.0 * beta)).abs() < 1e-12);
        assert!((u.reward[1] - (0.4 + 3.0 * beta)).abs() < 1e-12);
        assert!((u.cost[0][0] - (0.6 + beta)).abs() < 1e-12);
        assert!((u.cost[0][1] - (0.2 + beta)).abs() < 1e-12);
        assert_eq!((u.reward[2], u.cost[0][2]), (0.3, 0.1));
    }

    #[test]
    fn mab_unpulled_policies() {
        let s = MabState::new(2, 0, 0.0, &[0.0]).unwrap();
        let z = s.ucbs(2.0, 1.0, 0.1, UnpulledArmPolicy::ZeroMeanZeroRadius);
        assert_eq!((z.reward[1], z.cost[0][1]), (0.0, 0.0));
        let c = s.ucbs(2.0, 1.0, 0.1, UnpulledArmPolicy::ClampedCount);
        let b1 = (2.0 * 10f64.ln()).sqrt();
        assert!((c.reward[1] - 2.0 * b1).abs() < 1e-14);
        assert!((c.cost[0][1] - b1).abs() < 1e-14);
    }

    fn toy_classes() -> (FunctionClass, FunctionClass) {
        let r = FunctionClass::new(vec![vec![0.2, 0.8], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let c = FunctionClass::new(vec![vec![0.0, 0.3], vec![0.0, 0.7]]).unwrap();
        (r, c)
    }

    #[test]
    fn least_squares_empty_and_noiseless() {
        let (r, c) = toy_classes();
        let mut s = FiniteClassState::new(r, c).unwrap();
        assert_eq!(s.least_squares(Target::Reward), 0);
        assert_eq!(s.least_squares(Target::Cost), 0);
        s.update(0, 0.9, 0.0).unwrap();
        s.update(1, 0.1, 0.7).unwrap();
        assert_eq!(s.least_squares(Target::Reward), 2);
        assert_eq!(s.least_squares(Target::Cost), 1);
        assert_eq!(s.losses(Target::Reward)[2], 0.0);
    }

    #[test]
    fn incremental_losses_match_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let table: Vec<Vec<f64>> = (0..9).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        let class = FunctionClass::new(table.clone()).unwrap();
        let mut s = FiniteClassState::new(class.clone(), class).unwrap();
        for _ in 0..200 {
            let a = rng.random_range(0..5);
            let y = table[4][a] + rng.random_range(-0.3..0.3);
            s.update(a, y, y).unwrap();
        }
        let scan: Vec<f64> = table
            .iter()
            .map(|row| s.dataset().iter().map(|&(a, y, _)| (row[a] - y).powi(2)).sum())
            .collect();
        let mut best = 0;
        for f in 1..scan.len() {
            if scan[f] < scan[best] {
                best = f;
            }
        }
        for (l, o) in s.losses(Target::Reward).iter().zip(&scan) {
            assert!((l - o).abs() < 1e-9 * o.max(1.0));
        }
        assert_eq!(s.least_squares(Target::Reward), best);
    }

    #[test]
    fn dataset_distance_by_hand() {
        let (r, c) = toy_classes();
        let mut s = FiniteClassState::new(r, c).unwrap();
        s.update(0, 0.0, 0.0).unwrap();
        s.update(0, 0.0, 0.0).unwrap();
        s.update(1, 0.0, 0.0).unwrap();
        // f0 − f1 = (−0.3, 0.3): 2·0.09 + 0.09.
        assert!((s.dataset_sq_dist(Target::Reward, 0, 1) - 0.27).abs() < 1e-12);
        assert!((s.dataset_sq_dist(Target::Cost, 0, 1) - 0.16).abs() < 1e-12);
    }

    #[test]
    fn warm_start_deterministic_stop_time() {
        let ws = warm_start(|| (0.3, 0.1), 0.6, 0.1, 100_000).unwrap();
        let analytic = (72.0 * (2.0e6f64).ln()).ceil() as usize;
        assert_eq!(analytic, 1045);
        assert!(ws.cost_stop.abs_diff(analytic) <= 1);
        assert!((ws.cost_gap - 0.5).abs() < 1e-12);
        assert!((ws.reward_gap - 0.7).abs() < 1e-12);
    }

    #[test]
    fn warm_start_infeasible_safe_action_exhausts_horizon() {
        let err = warm_start(|| (0.0, 0.6), 0.6, 0.1, 5000).unwrap_err();
        assert!(matches!(err, Error::HorizonExhausted { horizon: 5000 }));
    }
}
