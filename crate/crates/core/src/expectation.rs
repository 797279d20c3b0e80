//! Algorithms whose constraint holds in expectation over a randomized policy:
//! OPB for multi-armed bandits and OPLB for finite linear action sets.

use rand::Rng;

use crate::confidence::{mab_delta_prime, ConfidenceSpec, DeltaAllocation};
use crate::error::{Error, Result};
use crate::estimation::{CostModel, LinearState, MabState, MabUcbs, UnpulledArmPolicy};
use crate::geometry::{max_feasible_alpha, DiscreteSet, BISECTION_TOL};
use crate::lc_lucb::{LinearValues, SegmentValue};
use crate::linalg::{check_dim, Vector};
use crate::lp_solver::{solve_support2, solve_support_m1, SimplexLp, SparsePolicy};

pub const GOLDEN_SECTION_ITERS: usize = 80;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct OpbConfig {
    pub alpha_r: f64,
    pub alpha_c: f64,
    pub delta: f64,
    pub horizon: usize,
    pub tau: Vec<f64>,
    pub safe_arm: usize,
    pub safe_reward: f64,
    pub safe_costs: Vec<f64>,
    pub unpulled: UnpulledArmPolicy,
}

#[derive(Clone, Debug)]
pub struct Opb {
    pub config: OpbConfig,
    pub state: MabState,
    delta_prime: f64,
}

#[derive(Clone, Debug)]
pub struct OpbStep {
    pub policy: SparsePolicy,
    pub arm: usize,
    pub ucbs: MabUcbs,
    /// `E_{a∼π_t} u^r_a`.
    pub value: f64,
}

impl Opb {
    pub fn new(arms: usize, config: OpbConfig) -> Result<Self> {
        if config.tau.len() != config.safe_costs.len() {
            return Err(Error::invalid("one safe cost per threshold required"));
        }
        if config.safe_costs.iter().zip(&config.tau).any(|(c, t)| c >= t) {
            return Err(Error::invalid("safe arm must be strictly feasible"));
        }
        if !(config.delta > 0.0 && config.delta < 1.0) || config.horizon == 0 {
            return Err(Error::invalid("need delta in (0, 1) and a positive horizon"));
        }
        let state = MabState::new(arms, config.safe_arm, config.safe_reward, &config.safe_costs)?;
        let delta_prime = mab_delta_prime(config.delta, arms, config.horizon);
        Ok(Self {
            config,
            state,
            delta_prime,
        })
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    pub fn ucbs(&self) -> MabUcbs {
        self.state.ucbs(
            self.config.alpha_r,
            self.config.alpha_c,
            self.delta_prime,
            self.config.unpulled,
        )
    }

    /// Solves the optimistic-pessimistic LP on the current bounds and samples an arm.
    pub fn step(&self, rng: &mut impl Rng) -> Result<OpbStep> {
        let ucbs = self.ucbs();
        let lp = SimplexLp {
            reward: ucbs.reward.clone(),
            cost: ucbs.cost.clone(),
            tau: self.config.tau.clone(),
        };
        let sol = if lp.constraints() == 1 {
            solve_support2(&lp)?
        } else {
            solve_support_m1(&lp)?
        };
        let arm = sol.policy.sample(rng);
        Ok(OpbStep {
            policy: sol.policy,
            arm,
            ucbs,
            value: sol.value,
        })
    }

    pub fn update(&mut self, arm: usize, reward: f64, costs: &[f64]) -> Result<()> {
        self.state.update(arm, reward, costs)
    }

    /// Whether every non-safe arm's true means lie within `β_a` of the
    /// empirical means (unpulled arms count as covered).
    pub fn means_in_set(&self, rbar: &[f64], cbar: &[Vec<f64>]) -> bool {
        (0..self.state.arms()).all(|a| {
            if a == self.state.safe_arm() || self.state.counts()[a] == 0 {
                return true;
            }
            let beta = crate::confidence::mab_radius(self.state.counts()[a], self.delta_prime);
            let r_ok = (self.state.mean_reward(a).unwrap() - rbar[a]).abs() <= beta;
            let c_ok = cbar
                .iter()
                .enumerate()
                .all(|(i, row)| (self.state.mean_cost(a, i).unwrap() - row[a]).abs() <= beta);
            r_ok && c_ok
        })
    }
}

#[derive(Clone, Debug)]
pub struct OplbConfig {
    pub spec: ConfidenceSpec,
    pub tau: Vec<f64>,
    pub c0: Vec<f64>,
    pub cost_model: CostModel,
    pub allocation: DeltaAllocation,
    pub tol: f64,
}

impl OplbConfig {
    pub fn new(spec: ConfidenceSpec, c0: Vec<f64>, tau: Vec<f64>) -> Self {
        Self {
            spec,
            tau,
            c0,
            cost_model: CostModel::Projected,
            allocation: DeltaAllocation::PassThrough,
            tol: BISECTION_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Oplb {
    pub config: OplbConfig,
    pub state: LinearState,
}

#[derive(Clone, Debug)]
pub struct OplbStep {
    pub policy: SparsePolicy,
    pub action: usize,
    /// `Ṽ_r(π_t)`.
    pub value: f64,
}

/// Mean action `x_π = Σ π_a x_a`.
pub fn mean_action(policy: &SparsePolicy, actions: &[Vector]) -> Vector {
    let mut x = Vector::zeros(actions[0].len());
    for (&a, &w) in policy.support.iter().zip(&policy.weights) {
        x.axpy(w, &actions[a], 1.0);
    }
    x
}

/// Minimizer of a unimodal function on `[0, 1]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [a, mid, b].into_iter().min_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap()
}

impl Oplb {
    pub fn new(x0: &Vector, config: OplbConfig) -> Result<Self> {
        config.spec.validate()?;
        if config.tau.len() != config.c0.len() {
            return Err(Error::invalid("one safe cost per threshold required"));
        }
        if config.c0.iter().zip(&config.tau).any(|(c, t)| c >= t) {
            return Err(Error::invalid("safe action must be strictly feasible"));
        }
        let state = LinearState::new(x0, &config.c0, config.spec.ridge, config.cost_model)?;
        Ok(Self { config, state })
    }

    pub fn values(&self) -> Result<LinearValues> {
        LinearValues::new(&self.state, &self.config.spec, self.config.allocation)
    }

    /// `(Ṽ_r(π), Ṽ_c^(i)(π))`, both evaluated at the mean action `x_π`.
    pub fn policy_values(values: &LinearValues, policy: &SparsePolicy, actions: &[Vector]) -> (f64, Vec<f64>) {
        let x = mean_action(policy, actions);
        let costs = (0..values.constraints())
            .map(|i| values.pessimistic_cost(&x, i))
            .collect();
        (values.optimistic_reward(&x), costs)
    }

    /// Searches point masses and two-point mixtures. On a segment between two
    /// actions both `Ṽ_c` and `Ṽ_r` are convex in the mixing weight, so the
    /// feasible weights form an interval and the best feasible weight is one
    /// of its ends. When both ends of a segment are infeasible, golden-section
    /// search on the worst constraint excess locates a feasible interior point
    /// if one exists.
    pub fn step_with(&self, values: &LinearValues, set: &DiscreteSet, rng: &mut impl Rng) -> Result<OplbStep> {
        check_dim(self.state.dim(), set.dim())?;
        let tau = &self.config.tau;
        let tol = self.config.tol;
        let actions = &set.actions;
        let k = actions.len();

        let mut best: Option<(SparsePolicy, f64)> = None;
        let mut offer = |policy: SparsePolicy, value: f64| {
            if best.as_ref().map_or(true, |(_, b)| value > b + TIE_TOL) {
                best = Some((policy, value));
            }
        };

        for a in 0..k {
            if values.cost_excess(&actions[a], tau) <= 0.0 {
                offer(SparsePolicy::point(a), values.optimistic_reward(&actions[a]));
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                // x(η) = x_j + η (x_i − x_j): weight η on i.
                let p = &actions[j];
                let w = &actions[i] - p;
                let segs: Vec<SegmentValue> = (0..tau.len()).map(|c| values.cost_segment(p, &w, c)).collect();
                let excess = |eta: f64| {
                    segs.iter()
                        .zip(tau)
                        .map(|(s, t)| s.eval(eta) - t)
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let (g0, g1) = (excess(0.0), excess(1.0));
                let mut etas = Vec::with_capacity(2);
                if g0 <= 0.0 && g1 <= 0.0 {
                    continue;
                } else if g0 <= 0.0 {
                    etas.push(max_feasible_alpha(&excess, 0.0, tol)?);
                } else if g1 <= 0.0 {
                    etas.push(1.0 - max_feasible_alpha(|s| excess(1.0 - s), 0.0, tol)?);
                } else {
                    let m = golden_section_min(&excess, GOLDEN_SECTION_ITERS);
                    if excess(m) > 0.0 {
                        continue;
                    }
                    etas.push(m - m * max_feasible_alpha(|s| excess(m - s * m), 0.0, tol)?);
                    etas.push(m + (1.0 - m) * max_feasible_alpha(|s| excess(m + s * (1.0 - m)), 0.0, tol)?);
                }
                let reward = values.reward_segment(p, &w);
                for eta in etas {
                    if eta <= 0.0 || eta >= 1.0 {
                        continue;
                    }
                    let policy = SparsePolicy {
                        support: vec![i, j],
                        weights: vec![eta, 1.0 - eta],
                    };
                    offer(policy, reward.eval(eta));
                }
            }
        }
        let (policy, value) = best.unwrap_or_else(|| {
            let x0 = &actions[set.safe_index];
            (SparsePolicy::point(set.safe_index), values.optimistic_reward(x0))
        });
        let action = policy.sample(rng);
        Ok(OplbStep { policy, action, value })
    }

    pub fn step(&self, set: &DiscreteSet, rng: &mut impl Rng) -> Result<OplbStep> {
        self.step_with(&self.values()?, set, rng)
    }

    pub fn update(&mut self, x: &Vector, reward: f64, costs: &[f64]) -> Result<()> {
        self.state.update(x, reward, costs)
    }
}
