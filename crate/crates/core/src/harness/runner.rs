//! The algorithm-environment loop for one seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::baseline::safe_ts_step;
use super::config::{AlgorithmKind, Alpha, ClassSource, EnvironmentConfig, ExperimentConfig, MabPreset, NoiseKind};
use crate::confidence::{
    auto_alphas, auto_alphas_multi, lc_lucb_regret_bound, min_safety_gap, opb_regret_bound, oplb_regret_bound,
    AlphaMode, ConfidenceSpec,
};
use crate::environments::{
    make_four_arm_env, make_lower_bound_env, make_random_mab, make_sphere_env, make_star_env, make_toy_class_env,
    ActionSet, FiniteClassEnv, LinearEnv, MabEnv, Noise,
};
use crate::error::{Error, Result};
use crate::estimation::{warm_start, CostModel};
use crate::expectation::{Opb, OpbConfig, Oplb, OplbConfig};
use crate::geometry::DiscreteSet;
use crate::lc_lucb::{LcLucb, LcLucbConfig};
use crate::linalg::vector;
use crate::nonlinear::{FunctionClass, OpnlbConfig, OpnlbRun};

/// Slack for float rounding when comparing a mean cost to its threshold.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Slack for float rounding in the optimism check.
pub const OPTIMISM_TOL: f64 = 1e-9;

/// One row of a per-seed output file.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub action: String,
    pub reward: f64,
    pub costs: Vec<f64>,
    /// Expected reward of the played action, or of the policy for
    /// algorithms constrained in expectation.
    pub mean_reward: f64,
    pub mean_costs: Vec<f64>,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub violated: bool,
}

pub trait RecordSink {
    fn record(&mut self, rec: &RoundRecord) -> Result<()>;
}

/// Discards records.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &RoundRecord) -> Result<()> {
        Ok(())
    }
}

impl RecordSink for Vec<RoundRecord> {
    fn record(&mut self, rec: &RoundRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Per-seed trajectory and instrumentation.
#[derive(Clone, Debug, Default)]
pub struct SeedResult {
    pub seed: u64,
    pub horizon: usize,
    pub constraints: usize,
    pub oracle_value: f64,
    pub cum_regret: Vec<f64>,
    pub mean_reward: Vec<f64>,
    /// `mean_cost[i][t]`.
    pub mean_cost: Vec<Vec<f64>>,
    pub violations: usize,
    /// Rounds in which the true parameters were inside every confidence set.
    pub clean_rounds: usize,
    /// Rounds where the optimism check applied (clean rounds of an optimistic
    /// algorithm).
    pub optimism_checks: usize,
    pub optimism_failures: usize,
    pub warm_start_rounds: usize,
    /// Rounds whose decision used a subsampled search.
    pub approximate_rounds: usize,
    pub alpha_r: f64,
    pub alpha_c: Option<f64>,
    /// Regret bound for this instance, where one applies.
    pub theorem_bound: Option<f64>,
    /// Wall time of the run; kept out of written output.
    pub elapsed: std::time::Duration,
}

impl SeedResult {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.horizon as f64
    }

    /// Every round had the truth inside the confidence sets.
    pub fn clean(&self) -> bool {
        self.clean_rounds == self.horizon - self.warm_start_rounds
    }
}

enum Instance {
    Linear(LinearEnv),
    Mab(MabEnv),
    Class(FiniteClassEnv),
}

fn noise(cfg: &ExperimentConfig) -> Noise {
    match cfg.noise.kind {
        NoiseKind::Gaussian => Noise::Gaussian { sigma: cfg.noise.sigma },
        NoiseKind::Bernoulli => Noise::Bernoulli,
    }
}

/// Instance randomness comes from the environment seed if one is fixed,
/// otherwise from a separate stream of the run seed.
fn env_rng(fixed: Option<u64>, seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(fixed.unwrap_or(seed));
    rng.set_stream(1);
    rng
}

fn one_tau(tau: &[f64], path: &str) -> Result<f64> {
    match tau {
        [t] => Ok(*t),
        _ => Err(Error::config(path, "this environment takes a single threshold")),
    }
}

fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let sigma = cfg.noise.sigma;
    Ok(match &cfg.environment {
        EnvironmentConfig::Star { d, tau } => Instance::Linear(make_star_env(*d, *tau, sigma)?),
        EnvironmentConfig::Sphere { d, n_rays, seed: fixed } => {
            Instance::Linear(make_sphere_env(*d, *n_rays, sigma, &mut env_rng(*fixed, seed))?)
        }
        EnvironmentConfig::Discrete {
            theta,
            mu,
            actions,
            safe_index,
            tau,
        } => {
            let set = DiscreteSet::new(actions.iter().map(|a| vector(a)).collect(), *safe_index)?;
            Instance::Linear(LinearEnv::new(
                vector(theta),
                mu.iter().map(|m| vector(m)).collect(),
                tau.clone(),
                ActionSet::Discrete(set),
                noise(cfg),
            )?)
        }
        EnvironmentConfig::Mab { preset, tau } => {
            let mut env = match preset {
                MabPreset::FourArm => make_four_arm_env(one_tau(tau, "environment.tau")?)?,
                MabPreset::Random { arms, seed: fixed } => {
                    make_random_mab(*arms, one_tau(tau, "environment.tau")?, &mut env_rng(*fixed, seed))?
                }
                MabPreset::Explicit {
                    rewards,
                    costs,
                    safe_arm,
                } => MabEnv::new(rewards.clone(), costs.clone(), tau.clone(), *safe_arm, noise(cfg))?,
            };
            env.noise = noise(cfg);
            Instance::Mab(env)
        }
        EnvironmentConfig::LowerBound {
            arms,
            tau,
            c0,
            r0,
            variant,
        } => {
            let mut env = make_lower_bound_env(*arms, *tau, *c0, *r0, *variant)?;
            env.noise = noise(cfg);
            Instance::Mab(env)
        }
        EnvironmentConfig::FiniteClass {
            source,
            tau,
            safe_action,
        } => match source {
            ClassSource::Files {
                reward,
                cost,
                true_reward,
                true_cost,
            } => {
                let reward_class = FunctionClass::load(reward)?;
                let cost_class = FunctionClass::load(cost)?;
                if *true_reward >= reward_class.len() || *true_cost >= cost_class.len() {
                    return Err(Error::config("environment.true_reward", "function index out of range"));
                }
                Instance::Class(FiniteClassEnv {
                    reward_class,
                    cost_class,
                    true_reward: *true_reward,
                    true_cost: *true_cost,
                    tau: *tau,
                    safe_action: *safe_action,
                    noise: noise(cfg),
                })
            }
            ClassSource::Toy {
                functions,
                actions,
                c0,
                seed: fixed,
            } => {
                if *safe_action != 0 {
                    return Err(Error::config(
                        "environment.safe_action",
                        "the toy class pins the safe action to 0",
                    ));
                }
                let mut rng = env_rng(*fixed, seed);
                Instance::Class(make_toy_class_env(
                    *functions,
                    *actions,
                    *c0,
                    tau - c0,
                    noise(cfg),
                    &mut rng,
                )?)
            }
        },
    })
}

/// Tracks regret and instrumentation while emitting records.
struct Tracker<'a, S: RecordSink> {
    sink: &'a mut S,
    result: SeedResult,
    tau: Vec<f64>,
}

impl<S: RecordSink> Tracker<'_, S> {
    fn push(
        &mut self,
        action: String,
        reward: f64,
        costs: Vec<f64>,
        mean_reward: f64,
        mean_costs: Vec<f64>,
    ) -> Result<()> {
        let t = self.result.cum_regret.len() + 1;
        let inst_regret = self.result.oracle_value - mean_reward;
        let cum_regret = self.result.final_regret() + inst_regret;
        let violated = mean_costs
            .iter()
            .zip(&self.tau)
            .any(|(c, tau)| *c > tau + VIOLATION_TOL);
        if violated {
            self.result.violations += 1;
        }
        self.result.cum_regret.push(cum_regret);
        self.result.mean_reward.push(mean_reward);
        for (col, c) in self.result.mean_cost.iter_mut().zip(&mean_costs) {
            col.push(*c);
        }
        self.sink.record(&RoundRecord {
            t,
            action,
            reward,
            costs,
            mean_reward,
            mean_costs,
            inst_regret,
            cum_regret,
            violated,
        })
    }

    fn instrument(&mut self, in_set: bool, value: Option<f64>) {
        if !in_set {
            return;
        }
        self.result.clean_rounds += 1;
        if let Some(v) = value {
            self.result.optimism_checks += 1;
            if v < self.result.oracle_value - OPTIMISM_TOL {
                self.result.optimism_failures += 1;
            }
        }
    }
}

/// Runs one seed, streaming a record per round into `sink`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, sink: &mut impl RecordSink) -> Result<SeedResult> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let instance = build_instance(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = match (cfg.algorithm.kind, instance) {
        (AlgorithmKind::LcLucb | AlgorithmKind::SafeTsBaseline, Instance::Linear(env)) => {
            run_star(cfg, seed, &env, &mut rng, sink)
        }
        (AlgorithmKind::Oplb, Instance::Linear(env)) => run_oplb(cfg, seed, &env, &mut rng, sink),
        (AlgorithmKind::Opb, Instance::Mab(env)) => run_opb(cfg, seed, &env, &mut rng, sink),
        (AlgorithmKind::Opnlb, Instance::Class(env)) => run_opnlb(cfg, seed, &env, &mut rng, sink),
        _ => Err(Error::config("environment.kind", "not supported by this algorithm")),
    }?;
    result.elapsed = start.elapsed();
    Ok(result)
}

fn base_result(cfg: &ExperimentConfig, seed: u64, constraints: usize, oracle_value: f64) -> SeedResult {
    SeedResult {
        seed,
        horizon: cfg.algorithm.horizon,
        constraints,
        oracle_value,
        cum_regret: Vec::with_capacity(cfg.algorithm.horizon),
        mean_reward: Vec::with_capacity(cfg.algorithm.horizon),
        mean_cost: vec![Vec::with_capacity(cfg.algorithm.horizon); constraints],
        ..SeedResult::default()
    }
}

fn resolve(alpha: Alpha, auto: f64) -> f64 {
    match alpha {
        Alpha::Auto => auto,
        Alpha::Fixed(v) => v,
    }
}

fn resolve_spec(cfg: &ExperimentConfig, r0: f64, c0: &[f64], tau: &[f64], mode: AlphaMode) -> Result<ConfidenceSpec> {
    let auto = auto_alphas_multi(r0, c0, tau, mode)?;
    Ok(ConfidenceSpec {
        alpha_r: resolve(cfg.algorithm.alpha_r, auto.alpha_r),
        alpha_c: resolve(cfg.algorithm.alpha_c, auto.alpha_c.unwrap_or(1.0)),
        ..cfg.confidence
    })
}

fn ray_label(ray: Option<usize>, scale: f64) -> String {
    match ray {
        None => "x0".to_string(),
        Some(i) => format!("ray{i}@{scale}"),
    }
}

fn run_star(
    cfg: &ExperimentConfig,
    seed: u64,
    env: &LinearEnv,
    rng: &mut ChaCha8Rng,
    sink: &mut impl RecordSink,
) -> Result<SeedResult> {
    let ActionSet::Star(set) = &env.actions else {
        return Err(Error::config("environment.kind", "needs a star-convex action set"));
    };
    let horizon = cfg.algorithm.horizon;
    let x0 = set.center.clone();
    let r0 = env.safe_reward();
    let mut tracker = Tracker {
        sink,
        result: base_result(cfg, seed, env.tau.len(), env.star_oracle(set).value),
        tau: env.tau.clone(),
    };

    let mut warm: Vec<(f64, Vec<f64>)> = Vec::new();
    let (spec, c0, cost_model) = if cfg.algorithm.warm_start {
        let tau = one_tau(&env.tau, "environment.tau")?;
        let ws = warm_start(
            || {
                let (r, c) = env.sample(&x0, rng).expect("safe action means are valid");
                let c1 = c[0];
                warm.push((r, c));
                (r, c1)
            },
            tau,
            cfg.confidence.delta,
            horizon,
        )?;
        let alphas = ws.alphas();
        let spec = ConfidenceSpec {
            alpha_r: resolve(cfg.algorithm.alpha_r, alphas.alpha_r),
            alpha_c: resolve(cfg.algorithm.alpha_c, alphas.alpha_c.unwrap_or(1.0)),
            ..cfg.confidence
        };
        (spec, vec![ws.cost_estimate], CostModel::Full)
    } else {
        let c0 = env.safe_costs();
        let spec = resolve_spec(cfg, r0, &c0, &env.tau, AlphaMode::HighProb)?;
        (spec, c0, cfg.algorithm.cost_model)
    };
    tracker.result.alpha_r = spec.alpha_r;
    tracker.result.alpha_c = Some(spec.alpha_c);
    if cfg.algorithm.kind == AlgorithmKind::LcLucb {
        tracker.result.theorem_bound = Some(lc_lucb_regret_bound(&spec, env.dim(), horizon));
    }

    let mut lc = LcLucbConfig::new(spec, x0.clone(), c0, env.tau.clone());
    lc.cost_model = cost_model;
    lc.allocation = cfg.algorithm.delta_allocation;
    let mut alg = LcLucb::new(lc)?;

    tracker.result.warm_start_rounds = warm.len();
    let safe_costs = env.mean_costs(&x0);
    for (r, c) in warm {
        alg.update(&x0, r, &c)?;
        tracker.push("x0".into(), r, c, r0, safe_costs.clone())?;
    }

    while tracker.result.cum_regret.len() < horizon {
        let values = alg.values()?;
        let step = match cfg.algorithm.kind {
            AlgorithmKind::SafeTsBaseline => safe_ts_step(
                &values,
                set,
                &alg.config.tau,
                alg.config.tol,
                cfg.algorithm.ts_scale,
                rng,
            )?,
            _ => alg.step_with(&values, set)?,
        };
        let in_set = values.reward_in_set(&alg.state, &env.theta)
            && env
                .mu
                .iter()
                .enumerate()
                .all(|(i, m)| values.cost_in_set(&alg.state, m, i));
        let optimistic = (cfg.algorithm.kind == AlgorithmKind::LcLucb).then_some(step.choice.value);
        tracker.instrument(in_set, optimistic);

        let x = &step.choice.point;
        let (r, c) = env.sample(x, rng)?;
        let scale = step.choice.ray.map_or(0.0, |i| step.alphas[i]);
        tracker.push(
            ray_label(step.choice.ray, scale),
            r,
            c.clone(),
            env.mean_reward(x),
            env.mean_costs(x),
        )?;
        alg.update(x, r, &c)?;
    }
    Ok(tracker.result)
}

fn run_oplb(
    cfg: &ExperimentConfig,
    seed: u64,
    env: &LinearEnv,
    rng: &mut ChaCha8Rng,
    sink: &mut impl RecordSink,
) -> Result<SeedResult> {
    let ActionSet::Discrete(set) = &env.actions else {
        return Err(Error::config("environment.kind", "needs a discrete action set"));
    };
    let x0 = env.safe_action().clone();
    let c0 = env.safe_costs();
    let spec = resolve_spec(cfg, env.safe_reward(), &c0, &env.tau, AlphaMode::Expectation)?;
    let oracle = env.policy_oracle(set)?;
    let mut tracker = Tracker {
        sink,
        result: base_result(cfg, seed, env.tau.len(), oracle.value),
        tau: env.tau.clone(),
    };
    tracker.result.alpha_r = spec.alpha_r;
    tracker.result.alpha_c = Some(spec.alpha_c);
    tracker.result.theorem_bound = Some(oplb_regret_bound(&spec, env.dim(), cfg.algorithm.horizon));

    let mut oc = OplbConfig::new(spec, c0, env.tau.clone());
    oc.cost_model = cfg.algorithm.cost_model;
    oc.allocation = cfg.algorithm.delta_allocation;
    let mut alg = Oplb::new(&x0, oc)?;

    let rewards: Vec<f64> = set.actions.iter().map(|a| env.mean_reward(a)).collect();
    let costs: Vec<Vec<f64>> = (0..env.tau.len())
        .map(|i| set.actions.iter().map(|a| a.dot(&env.mu[i])).collect())
        .collect();
    for _ in 0..cfg.algorithm.horizon {
        let values = alg.values()?;
        let step = alg.step_with(&values, set, rng)?;
        let in_set = values.reward_in_set(&alg.state, &env.theta)
            && env
                .mu
                .iter()
                .enumerate()
                .all(|(i, m)| values.cost_in_set(&alg.state, m, i));
        tracker.instrument(in_set, Some(step.value));

        let x = &set.actions[step.action];
        let (r, c) = env.sample(x, rng)?;
        let mean_costs = costs.iter().map(|row| step.policy.expectation(row)).collect();
        tracker.push(
            step.action.to_string(),
            r,
            c.clone(),
            step.policy.expectation(&rewards),
            mean_costs,
        )?;
        alg.update(x, r, &c)?;
    }
    Ok(tracker.result)
}

fn run_opb(
    cfg: &ExperimentConfig,
    seed: u64,
    env: &MabEnv,
    rng: &mut ChaCha8Rng,
    sink: &mut impl RecordSink,
) -> Result<SeedResult> {
    let horizon = cfg.algorithm.horizon;
    let r0 = env.rbar[env.safe_arm];
    let c0 = env.safe_costs();
    let auto = auto_alphas_multi(r0.clamp(0.0, 1.0), &c0, &env.tau, AlphaMode::Mab)?;
    let alpha_r = resolve(cfg.algorithm.alpha_r, auto.alpha_r);
    let alpha_c = resolve(cfg.algorithm.alpha_c, auto.alpha_c.unwrap_or(1.0));
    let oracle = env.oracle()?;
    let mut tracker = Tracker {
        sink,
        result: base_result(cfg, seed, env.tau.len(), oracle.value),
        tau: env.tau.clone(),
    };
    tracker.result.alpha_r = alpha_r;
    tracker.result.alpha_c = Some(alpha_c);
    tracker.result.theorem_bound = Some(opb_regret_bound(
        r0,
        min_safety_gap(&c0, &env.tau)?,
        env.arms(),
        horizon,
        cfg.confidence.delta,
    ));

    let mut alg = Opb::new(
        env.arms(),
        OpbConfig {
            alpha_r,
            alpha_c,
            delta: cfg.confidence.delta,
            horizon,
            tau: env.tau.clone(),
            safe_arm: env.safe_arm,
            safe_reward: r0,
            safe_costs: c0,
            unpulled: cfg.algorithm.unpulled_arm_policy,
        },
    )?;
    for _ in 0..horizon {
        let step = alg.step(rng)?;
        let in_set = alg.means_in_set(&env.rbar, &env.cbar);
        tracker.instrument(in_set, Some(step.value));

        let (r, c) = env.sample(step.arm, rng)?;
        tracker.push(
            step.arm.to_string(),
            r,
            c.clone(),
            env.policy_reward(&step.policy),
            env.policy_costs(&step.policy),
        )?;
        alg.update(step.arm, r, &c)?;
    }
    Ok(tracker.result)
}

fn run_opnlb(
    cfg: &ExperimentConfig,
    seed: u64,
    env: &FiniteClassEnv,
    rng: &mut ChaCha8Rng,
    sink: &mut impl RecordSink,
) -> Result<SeedResult> {
    let r0 = env.safe_reward();
    let c0 = env.safe_cost();
    let auto = auto_alphas(r0.clamp(0.0, 1.0), c0, env.tau, AlphaMode::Nonlinear)?;
    let alpha_r = resolve(cfg.algorithm.alpha_r, auto.alpha_r);
    let oracle = env.oracle()?;
    let mut tracker = Tracker {
        sink,
        result: base_result(cfg, seed, 1, oracle.value),
        tau: vec![env.tau],
    };
    tracker.result.alpha_r = alpha_r;

    let mut alg = OpnlbRun::new(
        env.reward_class.clone(),
        env.cost_class.clone(),
        OpnlbConfig {
            tau: env.tau,
            safe_action: env.safe_action,
            safe_reward: r0,
            safe_cost: c0,
            delta: cfg.confidence.delta,
            alpha_r,
            radius_scale: cfg.radius_scale,
            max_triples: cfg.algorithm.max_triples,
        },
    )?;
    let k = env.reward_class.actions();
    let rewards: Vec<f64> = (0..k).map(|a| env.mean_reward(a)).collect();
    let costs: Vec<f64> = (0..k).map(|a| env.mean_cost(a)).collect();
    for _ in 0..cfg.algorithm.horizon {
        let d = alg.step(rng)?;
        if d.approximate {
            tracker.result.approximate_rounds += 1;
        }
        let in_set = d.reward_set.contains(&env.true_reward) && d.cost_set.contains(&env.true_cost);
        tracker.instrument(in_set, Some(d.value));

        let (r, c) = env.sample(d.action, rng)?;
        tracker.push(
            d.action.to_string(),
            r,
            vec![c],
            d.policy.expectation(&rewards),
            vec![d.policy.expectation(&costs)],
        )?;
        alg.update(d.action, r, c)?;
    }
    Ok(tracker.result)
}
