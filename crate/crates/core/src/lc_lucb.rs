//! High-probability stage-wise constrained linear UCB over finite star-convex
//! action sets, with any number of linear constraints.

use crate::confidence::{per_sequence_delta, ConfidenceSpec, DeltaAllocation};
use crate::error::{Error, Result};
use crate::estimation::{CostModel, Estimates, LinearState};
use crate::geometry::{argmax_convex_over_rays, max_feasible_alpha, RayChoice, StarConvexSet, BISECTION_TOL};
use crate::linalg::{check_dim, project_safe, Vector};

/// `lin0 + η lin1 + κ √(q0 + 2η q1 + η² q2)`: a value of the closed form
/// restricted to the line `p + η w`. Convex in `η` for `κ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentValue {
    pub lin0: f64,
    pub lin1: f64,
    pub kappa: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

impl SegmentValue {
    pub fn eval(&self, eta: f64) -> f64 {
        let q = self.q0 + 2.0 * eta * self.q1 + eta * eta * self.q2;
        self.lin0 + eta * self.lin1 + self.kappa * q.max(0.0).sqrt()
    }
}

/// Closed-form optimistic reward and pessimistic costs for one round.
pub struct LinearValues {
    pub est: Estimates,
    pub beta_r: f64,
    pub beta_c: f64,
    pub alpha_r: f64,
    pub alpha_c: f64,
    e0: Option<Vector>,
    safe_scale: Vec<f64>,
}

impl LinearValues {
    /// Values for the round following the state's last update. The reward
    /// radius uses `β_t(δ_r, d)` and the cost radius `β_t(δ_c, d − 1)` (or `d`
    /// without projection).
    pub fn new(state: &LinearState, spec: &ConfidenceSpec, allocation: DeltaAllocation) -> Result<Self> {
        let delta = per_sequence_delta(spec.delta, allocation);
        let t = state.rounds() + 1;
        let est = state.estimates()?;
        // c₀/‖x₀‖ per constraint, read off as the known cost of e₀.
        let safe_scale = (0..state.constraints())
            .map(|i| match state.safe_direction() {
                Some(e0) => state.safe_cost_component(e0, i),
                None => 0.0,
            })
            .collect();
        Ok(Self {
            est,
            beta_r: crate::confidence::beta(t, delta, state.dim(), spec)?,
            beta_c: crate::confidence::beta(t, delta, state.cost_dim(), spec)?,
            alpha_r: spec.alpha_r,
            alpha_c: spec.alpha_c,
            e0: state.safe_direction().cloned(),
            safe_scale,
        })
    }

    pub fn constraints(&self) -> usize {
        self.safe_scale.len()
    }

    /// `Ṽ_r(x) = ⟨x, θ̂⟩ + α_r β_t(δ, d) ‖x‖_{Σ⁻¹}`.
    pub fn optimistic_reward(&self, x: &Vector) -> f64 {
        x.dot(&self.est.theta_hat) + self.alpha_r * self.beta_r * self.est.reward_width(x)
    }

    /// `Ṽ_c(x) = ⟨x, e₀⟩ c₀/‖x₀‖ + ⟨x_perp, μ̂_perp⟩ + α_c β_t(δ, d−1) ‖x_perp‖`.
    pub fn pessimistic_cost(&self, x: &Vector, constraint: usize) -> f64 {
        let safe = self
            .e0
            .as_ref()
            .map_or(0.0, |e0| x.dot(e0) * self.safe_scale[constraint]);
        let (_, x_perp) = project_safe(x, self.e0.as_ref());
        safe + x_perp.dot(&self.est.mu_perp[constraint]) + self.alpha_c * self.beta_c * self.est.cost_width(&x_perp)
    }

    /// Largest pessimistic cost slack violation, `max_i (Ṽ_c^(i)(x) − τ_i)`.
    pub fn cost_excess(&self, x: &Vector, tau: &[f64]) -> f64 {
        tau.iter()
            .enumerate()
            .map(|(i, t)| self.pessimistic_cost(x, i) - t)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Ṽ_r` along `p + η w`.
    pub fn reward_segment(&self, p: &Vector, w: &Vector) -> SegmentValue {
        let vp = self.est.reward_factor().solve(p);
        let vw = self.est.reward_factor().solve(w);
        SegmentValue {
            lin0: p.dot(&self.est.theta_hat),
            lin1: w.dot(&self.est.theta_hat),
            kappa: self.alpha_r * self.beta_r,
            q0: p.dot(&vp),
            q1: p.dot(&vw),
            q2: w.dot(&vw),
        }
    }

    /// `Ṽ_c^(i)` along `p + η w`.
    pub fn cost_segment(&self, p: &Vector, w: &Vector, constraint: usize) -> SegmentValue {
        let (_, pp) = project_safe(p, self.e0.as_ref());
        let (_, wp) = project_safe(w, self.e0.as_ref());
        let safe = |x: &Vector| {
            self.e0
                .as_ref()
                .map_or(0.0, |e0| x.dot(e0) * self.safe_scale[constraint])
        };
        let mu = &self.est.mu_perp[constraint];
        let wn = self.est.cost_width(&wp);
        let (q0, q1) = if pp.iter().all(|v| *v == 0.0) {
            (0.0, 0.0)
        } else {
            let pn = self.est.cost_width(&pp);
            let sum = self.est.cost_width(&(&pp + &wp));
            // Polarization: pᵀA w = (‖p + w‖² − ‖p‖² − ‖w‖²) / 2.
            (pn * pn, 0.5 * (sum * sum - pn * pn - wn * wn))
        };
        SegmentValue {
            lin0: safe(p) + pp.dot(mu),
            lin1: safe(w) + wp.dot(mu),
            kappa: self.alpha_c * self.beta_c,
            q0,
            q1,
            q2: wn * wn,
        }
    }

    /// Truncates every ray at the pessimistic-cost boundary of the tightest
    /// constraint.
    pub fn feasible_set(&self, set: &StarConvexSet, tau: &[f64], tol: f64) -> Result<(StarConvexSet, Vec<f64>)> {
        check_dim(self.constraints(), tau.len())?;
        let mut alphas = Vec::with_capacity(set.endpoints.len());
        let mut endpoints = Vec::with_capacity(set.endpoints.len());
        for e in &set.endpoints {
            let w = e - &set.center;
            let mut alpha: f64 = 1.0;
            for (i, &t) in tau.iter().enumerate() {
                let seg = self.cost_segment(&set.center, &w, i);
                alpha = alpha.min(max_feasible_alpha(|a| seg.eval(a), t, tol)?);
            }
            alphas.push(alpha);
            endpoints.push(&set.center + &w * alpha);
        }
        Ok((
            StarConvexSet {
                center: set.center.clone(),
                endpoints,
            },
            alphas,
        ))
    }

    /// `‖θ̂ − θ‖_Σ ≤ β_t(δ, d)`.
    pub fn reward_in_set(&self, state: &LinearState, theta: &Vector) -> bool {
        let diff = &self.est.theta_hat - theta;
        state.sigma().quadratic_form(&diff).max(0.0).sqrt() <= self.beta_r
    }

    /// `‖μ̂_perp − μ_perp‖_{Σ_perp} ≤ β_t(δ, d − 1)`.
    pub fn cost_in_set(&self, state: &LinearState, mu: &Vector, constraint: usize) -> bool {
        let (_, mu_perp) = project_safe(mu, self.e0.as_ref());
        let diff = &self.est.mu_perp[constraint] - mu_perp;
        state.sigma_perp().quadratic_form(&diff).max(0.0).sqrt() <= self.beta_c
    }
}

#[derive(Clone, Debug)]
pub struct LcLucbConfig {
    pub spec: ConfidenceSpec,
    pub tau: Vec<f64>,
    pub x0: Vector,
    /// Known safe cost per constraint.
    pub c0: Vec<f64>,
    pub cost_model: CostModel,
    pub allocation: DeltaAllocation,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct LcLucb {
    pub config: LcLucbConfig,
    pub state: LinearState,
}

#[derive(Clone, Debug)]
pub struct LcLucbStep {
    pub choice: RayChoice,
    /// Truncation scale per ray.
    pub alphas: Vec<f64>,
}

impl LcLucb {
    pub fn new(config: LcLucbConfig) -> Result<Self> {
        config.spec.validate()?;
        if config.tau.len() != config.c0.len() {
            return Err(Error::invalid("one safe cost per threshold required"));
        }
        if let Some((c, t)) = config.c0.iter().zip(&config.tau).find(|(c, t)| c >= t) {
            return Err(Error::invalid(format!("safe cost {c} is not below threshold {t}")));
        }
        let state = LinearState::new(&config.x0, &config.c0, config.spec.ridge, config.cost_model)?;
        Ok(Self { config, state })
    }

    pub fn values(&self) -> Result<LinearValues> {
        LinearValues::new(&self.state, &self.config.spec, self.config.allocation)
    }

    pub fn optimistic_reward(&self, x: &Vector) -> Result<f64> {
        Ok(self.values()?.optimistic_reward(x))
    }

    pub fn pessimistic_cost(&self, x: &Vector, constraint: usize) -> Result<f64> {
        Ok(self.values()?.pessimistic_cost(x, constraint))
    }

    /// Maximizes `Ṽ_r` over the pessimistically feasible part of `set`.
    pub fn step_with(&self, values: &LinearValues, set: &StarConvexSet) -> Result<LcLucbStep> {
        check_dim(self.state.dim(), set.dim())?;
        let (feasible, alphas) = values.feasible_set(set, &self.config.tau, self.config.tol)?;
        let choice = argmax_convex_over_rays(&feasible, |x| values.optimistic_reward(x));
        Ok(LcLucbStep { choice, alphas })
    }

    pub fn step(&self, set: &StarConvexSet) -> Result<LcLucbStep> {
        self.step_with(&self.values()?, set)
    }

    pub fn update(&mut self, x: &Vector, reward: f64, costs: &[f64]) -> Result<()> {
        self.state.update(x, reward, costs)
    }
}

impl LcLucbConfig {
    pub fn new(spec: ConfidenceSpec, x0: Vector, c0: Vec<f64>, tau: Vec<f64>) -> Self {
        Self {
            spec,
            tau,
            x0,
            c0,
            cost_model: CostModel::Projected,
            allocation: DeltaAllocation::PassThrough,
            tol: BISECTION_TOL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> ConfidenceSpec {
        ConfidenceSpec {
            noise: 0.1,
            delta: 0.1,
            ..ConfidenceSpec::default()
        }
    }

    #[test]
    fn safe_action_costs_exactly_c0() {
        let x0 = vector(&[0.0, 0.6, 0.0]);
        let mut run = LcLucb::new(LcLucbConfig::new(spec(), x0.clone(), vec![0.2], vec![0.5])).unwrap();
        run.update(&vector(&[0.3, 0.2, 0.1]), 0.4, &[0.3]).unwrap();
        assert!((run.pessimistic_cost(&x0, 0).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn no_data_values_are_pure_uncertainty() {
        let s = ConfidenceSpec {
            alpha_r: 2.0,
            alpha_c: 1.5,
            ..spec()
        };
        let run = LcLucb::new(LcLucbConfig::new(s, vector(&[1.0, 0.0, 0.0]), vec![0.1], vec![0.5])).unwrap();
        let x = vector(&[0.0, 0.6, 0.8]);
        let b3 = crate::confidence::beta(1, 0.1, 3, &s).unwrap();
        let b2 = crate::confidence::beta(1, 0.1, 2, &s).unwrap();
        assert!((run.optimistic_reward(&x).unwrap() - 2.0 * b3).abs() < 1e-12);
        assert!((run.pessimistic_cost(&x, 0).unwrap() - 1.5 * b2).abs() < 1e-12);
        assert_eq!(run.optimistic_reward(&Vector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn segments_match_pointwise_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for x0 in [vector(&[0.0, 0.0, 0.0, 0.0]), vector(&[0.2, -0.1, 0.3, 0.0])] {
            let mut run = LcLucb::new(LcLucbConfig::new(spec(), x0, vec![0.1, 0.05], vec![0.5, 0.6])).unwrap();
            for _ in 0..20 {
                let x = Vector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
                run.update(&x, rng.random(), &[rng.random(), rng.random()]).unwrap();
            }
            let v = run.values().unwrap();
            let p = Vector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
            let w = Vector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
            let rs = v.reward_segment(&p, &w);
            for eta in [0.0, 0.3, 0.75, 1.0] {
                let x = &p + &w * eta;
                assert!((rs.eval(eta) - v.optimistic_reward(&x)).abs() < 1e-10);
                for i in 0..2 {
                    assert!((v.cost_segment(&p, &w, i).eval(eta) - v.pessimistic_cost(&x, i)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn fully_pessimistic_start_stays_near_safe_action() {
        let s = ConfidenceSpec {
            alpha_c: 100.0,
            ..spec()
        };
        let x0 = vector(&[0.0, 0.0]);
        let run = LcLucb::new(LcLucbConfig::new(s, x0.clone(), vec![0.0], vec![0.2])).unwrap();
        let set = StarConvexSet::new(x0, vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0])]).unwrap();
        let step = run.step(&set).unwrap();
        assert!(step.choice.point.norm() < 1e-2);
        assert!(step.alphas.iter().all(|&a| a < 1e-2));
    }

    #[test]
    fn chosen_action_is_pessimistically_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x0 = vector(&[0.1, 0.0, 0.0]);
        let mut run = LcLucb::new(LcLucbConfig::new(spec(), x0.clone(), vec![0.05], vec![0.3])).unwrap();
        let endpoints: Vec<Vector> = (0..8)
            .map(|_| Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let set = StarConvexSet::new(x0, endpoints).unwrap();
        for _ in 0..50 {
            let step = run.step(&set).unwrap();
            let x = step.choice.point.clone();
            assert!(run.pessimistic_cost(&x, 0).unwrap() <= 0.3 + 1e-6);
            let c = x.dot(&vector(&[0.5, 0.2, 0.1])) + rng.random_range(-0.05..0.05);
            run.update(&x, rng.random(), &[c]).unwrap();
        }
    }
}
