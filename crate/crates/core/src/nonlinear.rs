//! Finite function classes: confidence subsets, the optimistic-pessimistic
//! policy step over them, and an exact eluder dimension for small classes.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use crate::confidence::gamma;
use crate::error::{Error, Result};
use crate::estimation::{FiniteClassState, Target};
use crate::lp_solver::{solve_generic, solve_support2, LpSolution, SimplexLp, SparsePolicy};

pub const ELUDER_MAX_ACTIONS: usize = 12;
pub const ELUDER_MAX_FUNCTIONS: usize = 16;
/// Largest classes the per-triple solver accepts.
pub const OPNLB_MAX_FUNCTIONS: usize = 256;
pub const OPNLB_MAX_ACTIONS: usize = 64;
/// Default cap on `|C_r| · |C_c|²` before triples are subsampled.
pub const DEFAULT_MAX_TRIPLES: usize = 1 << 16;
/// Tolerance for the safe-value pin `μ(x₀) = c₀`.
const PIN_TOL: f64 = 1e-12;
/// A cost row counts as violated when it exceeds `τ` by more than this.
const CUT_TOL: f64 = 1e-10;

/// A finite class of functions on a finite action set, stored as a table
/// `value(f, a)` with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionClass {
    table: Vec<Vec<f64>>,
    function_ids: Vec<String>,
    action_ids: Vec<String>,
}

impl FunctionClass {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let n = table.len();
        let k = table.first().map_or(0, Vec::len);
        Self::with_ids(
            table,
            (0..n).map(|i| format!("f{i}")).collect(),
            (0..k).map(|i| format!("a{i}")).collect(),
        )
    }

    pub fn with_ids(table: Vec<Vec<f64>>, function_ids: Vec<String>, action_ids: Vec<String>) -> Result<Self> {
        if table.is_empty() || action_ids.is_empty() {
            return Err(Error::invalid(
                "function class needs at least one function and one action",
            ));
        }
        if function_ids.len() != table.len() {
            return Err(Error::invalid("one id per function required"));
        }
        for (f, row) in table.iter().enumerate() {
            if row.len() != action_ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: action_ids.len(),
                    found: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!(
                    "function {} takes value {v} outside [0, 1]",
                    function_ids[f]
                )));
            }
        }
        Ok(Self {
            table,
            function_ids,
            action_ids,
        })
    }

    /// Reads a table whose first line is a label followed by action ids and
    /// whose other lines are a function id followed by one value per action.
    /// Fields are separated by commas or whitespace; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let fields = |l: &str| -> Vec<String> {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty function class file".into()))?;
        let header = fields(header);
        if header.len() < 2 {
            return Err(Error::Parse("header needs a label and at least one action id".into()));
        }
        let action_ids = header[1..].to_vec();
        let mut function_ids = Vec::new();
        let mut table = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = fields(line);
            if row.len() != action_ids.len() + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} values, expected {}",
                    n + 1,
                    row.len().saturating_sub(1),
                    action_ids.len()
                )));
            }
            let values = row[1..]
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: `{v}`: {e}", n + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            function_ids.push(row[0].clone());
            table.push(values);
        }
        Self::with_ids(table, function_ids, action_ids)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn actions(&self) -> usize {
        self.action_ids.len()
    }

    pub fn value(&self, f: usize, a: usize) -> f64 {
        self.table[f][a]
    }

    pub fn row(&self, f: usize) -> &[f64] {
        &self.table[f]
    }

    pub fn function_ids(&self) -> &[String] {
        &self.function_ids
    }

    pub fn action_ids(&self) -> &[String] {
        &self.action_ids
    }

    /// `E_{a∼π} f(a)`.
    pub fn expectation(&self, f: usize, policy: &SparsePolicy) -> f64 {
        policy.expectation(&self.table[f])
    }
}

/// Functions within `radius` of `center` in dataset norm, optionally restricted
/// to those with `f(x₀) = c₀`.
pub fn confidence_subset(
    state: &FiniteClassState,
    which: Target,
    center: usize,
    radius: f64,
    pin: Option<(usize, f64)>,
) -> Result<Vec<usize>> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("radius must be non-negative, got {radius}")));
    }
    let class = state.class(which);
    let r2 = radius * radius;
    let set: Vec<usize> = (0..class.len())
        .filter(|&f| pin.map_or(true, |(x0, c0)| (class.value(f, x0) - c0).abs() <= PIN_TOL))
        .filter(|&f| state.dataset_sq_dist(which, f, center) <= r2)
        .collect();
    if set.is_empty() {
        return Err(Error::EmptyConfidenceSet(format!("{which:?} class")));
    }
    Ok(set)
}

/// Known safe action and constraint for the nonlinear algorithm.
#[derive(Clone, Debug)]
pub struct OpnlbConfig {
    pub tau: f64,
    pub safe_action: usize,
    pub safe_reward: f64,
    pub safe_cost: f64,
    pub delta: f64,
    pub alpha_r: f64,
    /// Multiplies both confidence radii; 1 gives the exact radii.
    pub radius_scale: f64,
    pub max_triples: usize,
}

#[derive(Clone, Debug)]
pub struct OpnlbRun {
    pub config: OpnlbConfig,
    pub state: FiniteClassState,
    memo: Option<Memo>,
}

/// Last exact solution, keyed by everything the LP depends on.
#[derive(Clone, Debug)]
struct Memo {
    reward_set: Vec<usize>,
    cost_set: Vec<usize>,
    alpha_r: f64,
    tau: f64,
    policy: SparsePolicy,
}

#[derive(Clone, Debug)]
pub struct OpnlbDecision {
    pub policy: SparsePolicy,
    pub action: usize,
    /// Optimistic value `Ṽ_r(π_t)`.
    pub value: f64,
    pub reward_set: Vec<usize>,
    pub cost_set: Vec<usize>,
    /// Set when the triple enumeration was subsampled.
    pub approximate: bool,
}

impl OpnlbRun {
    pub fn new(reward_class: FunctionClass, cost_class: FunctionClass, config: OpnlbConfig) -> Result<Self> {
        if reward_class.len().max(cost_class.len()) > OPNLB_MAX_FUNCTIONS || reward_class.actions() > OPNLB_MAX_ACTIONS
        {
            return Err(Error::SizeLimit(format!(
                "OPNLB supports at most {OPNLB_MAX_FUNCTIONS} functions per class and {OPNLB_MAX_ACTIONS} actions"
            )));
        }
        if config.safe_cost >= config.tau {
            return Err(Error::invalid("safe cost must be below the threshold"));
        }
        if config.safe_action >= reward_class.actions() {
            return Err(Error::invalid("safe action out of range"));
        }
        if !(0..cost_class.len()).any(|f| (cost_class.value(f, config.safe_action) - config.safe_cost).abs() <= PIN_TOL)
        {
            return Err(Error::invalid(
                "no cost function matches the safe cost at the safe action",
            ));
        }
        if !(config.radius_scale >= 0.0) {
            return Err(Error::invalid("radius_scale must be non-negative"));
        }
        Ok(Self {
            state: FiniteClassState::new(reward_class, cost_class)?,
            config,
            memo: None,
        })
    }

    /// `√γ(t, δ/2)` scaled; `γ` bounds the squared dataset distance.
    pub fn radius(&self, which: Target) -> Result<f64> {
        let t = self.state.rounds().max(1);
        let g = gamma(t, self.config.delta / 2.0, self.state.class(which).len())?;
        Ok(self.config.radius_scale * g.sqrt())
    }

    pub fn confidence_sets(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let r_hat = self.state.least_squares(Target::Reward);
        let c_hat = self.state.least_squares(Target::Cost);
        let reward = confidence_subset(&self.state, Target::Reward, r_hat, self.radius(Target::Reward)?, None)?;
        let cost = confidence_subset(
            &self.state,
            Target::Cost,
            c_hat,
            self.radius(Target::Cost)?,
            Some((self.config.safe_action, self.config.safe_cost)),
        )?;
        Ok((reward, cost))
    }

    /// `Ṽ_r(π) = max_θ E_π θ + α_r max_{μ′, μ″} (E_π μ′ − E_π μ″)`.
    pub fn optimistic_value(&self, policy: &SparsePolicy, reward_set: &[usize], cost_set: &[usize]) -> f64 {
        let rc = self.state.class(Target::Reward);
        let cc = self.state.class(Target::Cost);
        let best_r = reward_set
            .iter()
            .map(|&f| rc.expectation(f, policy))
            .fold(f64::NEG_INFINITY, f64::max);
        let costs: Vec<f64> = cost_set.iter().map(|&f| cc.expectation(f, policy)).collect();
        let hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
        best_r + self.config.alpha_r * (hi - lo)
    }

    /// `Ṽ_c(π) = max_{μ ∈ C_c} E_π μ`.
    pub fn pessimistic_cost(&self, policy: &SparsePolicy, cost_set: &[usize]) -> f64 {
        let cc = self.state.class(Target::Cost);
        cost_set
            .iter()
            .map(|&f| cc.expectation(f, policy))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maximizes `Ṽ_r` over policies with `Ṽ_c ≤ τ`. For each triple
    /// `(θ, μ′, μ″)` the objective is linear in `π`, so one LP per triple with
    /// one cost row per function of `C_c` gives the exact optimum. Triples are
    /// visited in decreasing order of their unconstrained bound, and each LP is
    /// solved by adding violated rows, abandoning it once its relaxed value
    /// falls below the incumbent.
    ///
    /// The exact solution depends only on the two confidence sets, so it is
    /// reused while they stay the same.
    pub fn step(&mut self, rng: &mut impl Rng) -> Result<OpnlbDecision> {
        let (reward_set, cost_set) = self.confidence_sets()?;
        let cached = self.memo.as_ref().filter(|m| {
            m.reward_set == reward_set
                && m.cost_set == cost_set
                && m.alpha_r == self.config.alpha_r
                && m.tau == self.config.tau
        });
        let (policy, approximate) = match cached {
            Some(m) => (m.policy.clone(), false),
            None => {
                let (sol, approximate) = self.solve(&reward_set, &cost_set, rng)?;
                self.memo = (!approximate).then(|| Memo {
                    reward_set: reward_set.clone(),
                    cost_set: cost_set.clone(),
                    alpha_r: self.config.alpha_r,
                    tau: self.config.tau,
                    policy: sol.policy.clone(),
                });
                (sol.policy, approximate)
            }
        };
        let action = policy.sample(rng);
        let value = self.optimistic_value(&policy, &reward_set, &cost_set);
        Ok(OpnlbDecision {
            policy,
            action,
            value,
            reward_set,
            cost_set,
            approximate,
        })
    }

    fn solve(&self, reward_set: &[usize], cost_set: &[usize], rng: &mut impl Rng) -> Result<(LpSolution, bool)> {
        let rc = self.state.class(Target::Reward);
        let cc = self.state.class(Target::Cost);
        let k = rc.actions();
        let nc = cost_set.len();
        let total = reward_set.len() * nc * nc;

        let triples: Vec<usize> = if total > self.config.max_triples {
            let mut v = sample(rng, total, self.config.max_triples).into_vec();
            v.sort_unstable();
            v
        } else {
            (0..total).collect()
        };
        let approximate = triples.len() < total;

        let cost_rows: Vec<Vec<f64>> = cost_set.iter().map(|&f| cc.row(f).to_vec()).collect();
        let objective = |idx: usize| -> Vec<f64> {
            let th = reward_set[idx / (nc * nc)];
            let mu1 = cost_set[(idx / nc) % nc];
            let mu2 = cost_set[idx % nc];
            (0..k)
                .map(|a| rc.value(th, a) + self.config.alpha_r * (cc.value(mu1, a) - cc.value(mu2, a)))
                .collect()
        };

        let mut order: Vec<(usize, f64)> = triples
            .iter()
            .map(|&idx| (idx, objective(idx).into_iter().fold(f64::NEG_INFINITY, f64::max)))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut solved: Vec<(usize, LpSolution)> = Vec::new();
        let mut best_value = f64::NEG_INFINITY;
        for (idx, bound) in order {
            if bound < best_value - 1e-12 {
                break;
            }
            if let Some(sol) = solve_with_cuts(objective(idx), &cost_rows, self.config.tau, best_value - 1e-12)? {
                best_value = best_value.max(sol.value);
                solved.push((idx, sol));
            }
        }
        let (_, sol) = solved
            .into_iter()
            .filter(|(_, s)| s.value >= best_value - 1e-12)
            .min_by_key(|(idx, _)| *idx)
            .ok_or(Error::Infeasible)?;
        Ok((sol, approximate))
    }

    pub fn update(&mut self, action: usize, reward: f64, cost: f64) -> Result<()> {
        self.state.update(action, reward, cost)
    }
}

/// Exact simplex LP with one `≤ τ` row per entry of `rows`, solved by adding
/// the most violated row until the relaxed optimum is feasible. Every
/// relaxation bounds the full problem from above, so the solve gives up
/// (returning `None`) once that bound drops below `prune_below`.
fn solve_with_cuts(reward: Vec<f64>, rows: &[Vec<f64>], tau: f64, prune_below: f64) -> Result<Option<LpSolution>> {
    let mut best_arm = 0;
    for (a, v) in reward.iter().enumerate() {
        if *v > reward[best_arm] {
            best_arm = a;
        }
    }
    let mut sol = LpSolution {
        policy: SparsePolicy::point(best_arm),
        value: reward[best_arm],
    };
    let mut active: Vec<usize> = Vec::new();
    loop {
        if sol.value < prune_below {
            return Ok(None);
        }
        let mut worst: Option<(usize, f64)> = None;
        for (i, row) in rows.iter().enumerate() {
            let excess = sol.policy.expectation(row) - tau;
            if excess > CUT_TOL && worst.is_none_or(|(_, e)| excess > e) {
                worst = Some((i, excess));
            }
        }
        let Some((i, _)) = worst else {
            return Ok(Some(sol));
        };
        if active.contains(&i) {
            // Solver round-off on a row already enforced.
            return Ok(Some(sol));
        }
        active.push(i);
        let lp = SimplexLp {
            reward: reward.clone(),
            cost: active.iter().map(|&j| rows[j].clone()).collect(),
            tau: vec![tau; active.len()],
        };
        sol = if active.len() == 1 {
            solve_support2(&lp)?
        } else {
            solve_generic(&lp)?
        };
    }
}

/// Disjoint, sorted half-open intervals `[a, b)`.
type Intervals = Vec<(f64, f64)>;

fn normalize(mut v: Intervals) -> Intervals {
    v.retain(|&(a, b)| a < b);
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Intervals = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect(x: &Intervals, y: &Intervals) -> Intervals {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// `‖f − g‖_S` with the sum taken over `S` in increasing action order.
pub fn set_distance(class: &FunctionClass, f: usize, g: usize, actions: &[usize], mask: u32) -> f64 {
    actions
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &a)| (class.value(f, a) - class.value(g, a)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Exact `ε`-eluder dimension: the longest sequence of distinct actions in
/// which every element is `ε′`-independent of its predecessors for a common
/// `ε′ ≥ ε`.
///
/// An element `x` is `ε′`-independent of a set `S` exactly when `ε′` lies in
/// `∪_{f,f′} [‖f − f′‖_S, |f(x) − f′(x)|)`, which depends on `S` only as a set.
/// A dynamic program over subsets tracks which `ε′` admit some valid ordering.
pub fn eluder_dimension(class: &FunctionClass, actions: &[usize], eps: f64) -> Result<usize> {
    if actions.len() > ELUDER_MAX_ACTIONS || class.len() > ELUDER_MAX_FUNCTIONS {
        return Err(Error::SizeLimit(format!(
            "eluder dimension supports at most {ELUDER_MAX_ACTIONS} actions and {ELUDER_MAX_FUNCTIONS} functions, got {} and {}",
            actions.len(),
            class.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if let Some(&a) = actions.iter().find(|&&a| a >= class.actions()) {
        return Err(Error::invalid(format!("action {a} out of range")));
    }
    let n = actions.len();
    let g = class.len();
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|f| ((f + 1)..g).map(move |h| (f, h))).collect();
    let full = 1u32 << n;

    // Independence intervals for every (set, element) with the element outside the set.
    let independence = |mask: u32, x: usize| -> Intervals {
        normalize(
            pairs
                .iter()
                .map(|&(f, h)| {
                    let lo = set_distance(class, f, h, actions, mask);
                    let hi = (class.value(f, actions[x]) - class.value(h, actions[x])).abs();
                    (lo, hi)
                })
                .collect(),
        )
    };

    let mut valid: Vec<Intervals> = vec![Vec::new(); full as usize];
    valid[0] = vec![(eps, f64::INFINITY)];
    let mut best = 0;
    for mask in 1..full {
        let mut parts = Vec::new();
        for x in 0..n {
            if mask & (1 << x) == 0 {
                continue;
            }
            let rest = mask & !(1 << x);
            if valid[rest as usize].is_empty() {
                continue;
            }
            parts.extend(intersect(&valid[rest as usize], &independence(rest, x)));
        }
        let v = normalize(parts);
        if !v.is_empty() {
            best = best.max(mask.count_ones() as usize);
        }
        valid[mask as usize] = v;
    }
    Ok(best)
}
