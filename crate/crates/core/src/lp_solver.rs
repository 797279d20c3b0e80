//! Linear programs over the probability simplex:
//! `max Σ π_a r_a  s.t.  Σ π_a c_a^(i) ≤ τ_i,  π ∈ Δ_K`.
//!
//! [`solve_support2`] exploits the fact that a single-constraint instance has
//! an optimal policy mixing at most two arms. [`solve_generic`] is a dense
//! two-phase simplex method used for several constraints and as a cross-check.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest pivot magnitude the simplex method accepts.
pub const PIVOT_TOL: f64 = 1e-12;
/// Weights below this are dropped when reporting a support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// A later candidate must beat the incumbent by more than this.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexLp {
    /// Objective coefficient per arm.
    pub reward: Vec<f64>,
    /// `cost[i][a]`: arm `a` under constraint `i`.
    #[serde(default)]
    pub cost: Vec<Vec<f64>>,
    #[serde(default)]
    pub tau: Vec<f64>,
}

impl SimplexLp {
    pub fn new(reward: Vec<f64>, cost: Vec<Vec<f64>>, tau: Vec<f64>) -> Result<Self> {
        let lp = Self { reward, cost, tau };
        lp.validate()?;
        Ok(lp)
    }

    pub fn single(reward: Vec<f64>, cost: Vec<f64>, tau: f64) -> Result<Self> {
        Self::new(reward, vec![cost], vec![tau])
    }

    pub fn validate(&self) -> Result<()> {
        if self.reward.is_empty() {
            return Err(Error::invalid("LP needs at least one arm"));
        }
        if self.cost.len() != self.tau.len() {
            return Err(Error::invalid(format!(
                "{} cost rows but {} thresholds",
                self.cost.len(),
                self.tau.len()
            )));
        }
        for row in &self.cost {
            if row.len() != self.arms() {
                return Err(Error::DimensionMismatch {
                    expected: self.arms(),
                    found: row.len(),
                });
            }
        }
        let nan = self
            .reward
            .iter()
            .chain(self.cost.iter().flatten())
            .chain(&self.tau)
            .any(|v| v.is_nan());
        if nan {
            return Err(Error::invalid("LP coefficients must not be NaN"));
        }
        Ok(())
    }

    pub fn arms(&self) -> usize {
        self.reward.len()
    }

    pub fn constraints(&self) -> usize {
        self.tau.len()
    }

    fn is_finite(&self) -> bool {
        self.reward
            .iter()
            .chain(self.cost.iter().flatten())
            .chain(&self.tau)
            .all(|v| v.is_finite())
    }
}

/// A distribution over arms listed by its non-zero entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsePolicy {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SparsePolicy {
    pub fn point(arm: usize) -> Self {
        Self {
            support: vec![arm],
            weights: vec![1.0],
        }
    }

    /// Builds a policy from dense weights, dropping entries below [`SUPPORT_TOL`]
    /// and renormalizing.
    pub fn from_dense(weights: &[f64]) -> Self {
        let kept: Vec<(usize, f64)> = weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w >= SUPPORT_TOL)
            .collect();
        let total: f64 = kept.iter().map(|&(_, w)| w).sum();
        Self {
            support: kept.iter().map(|&(a, _)| a).collect(),
            weights: kept.iter().map(|&(_, w)| w / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight(&self, arm: usize) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(&a, _)| a == arm)
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn dense(&self, arms: usize) -> Vec<f64> {
        let mut out = vec![0.0; arms];
        for (&a, &w) in self.support.iter().zip(&self.weights) {
            out[a] += w;
        }
        out
    }

    /// `Σ π_a v_a` over positive weights, so `0 · ∞` never arises.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| w * values[a])
            .sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (&a, &w) in self.support.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return a;
            }
        }
        *self.support.last().expect("policy has non-empty support")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub policy: SparsePolicy,
    pub value: f64,
}

fn argmax_first(values: &[f64], mut eligible: impl FnMut(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (a, &v) in values.iter().enumerate() {
        if eligible(a) && best.map_or(true, |b| v > values[b] + TIE_TOL) {
            best = Some(a);
        }
    }
    best
}

/// Exact single-constraint solver enumerating feasible arms and cost-straddling
/// pairs. Ties go to singletons, then to the lowest indices.
pub fn solve_support2(lp: &SimplexLp) -> Result<LpSolution> {
    lp.validate()?;
    if lp.constraints() != 1 {
        return Err(Error::invalid(format!(
            "support-2 solver needs exactly one constraint, got {}",
            lp.constraints()
        )));
    }
    let r = &lp.reward;
    let c = &lp.cost[0];
    let tau = lp.tau[0];
    let k = lp.arms();

    let mut best: Option<LpSolution> = None;
    let offer = |cand: LpSolution, best: &mut Option<LpSolution>| {
        let better = match best {
            None => true,
            Some(b) => cand.value > b.value + TIE_TOL,
        };
        if better {
            *best = Some(cand);
        }
    };

    for a in 0..k {
        if c[a] <= tau {
            offer(
                LpSolution {
                    policy: SparsePolicy::point(a),
                    value: r[a],
                },
                &mut best,
            );
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let (lo, hi) = if c[i] <= c[j] { (i, j) } else { (j, i) };
            // The low member must be feasible and the high member strictly
            // infeasible; an infinite high cost forces its weight to zero.
            if !(c[lo] <= tau && c[hi] > tau && c[hi].is_finite()) || c[lo] == c[hi] {
                continue;
            }
            let w_lo = (c[hi] - tau) / (c[hi] - c[lo]);
            let w_hi = 1.0 - w_lo;
            if w_hi <= 0.0 {
                continue;
            }
            let (support, weights) = if lo < hi {
                (vec![lo, hi], vec![w_lo, w_hi])
            } else {
                (vec![hi, lo], vec![w_hi, w_lo])
            };
            let policy = SparsePolicy { support, weights };
            let value = policy.expectation(r);
            offer(LpSolution { policy, value }, &mut best);
        }
    }
    best.ok_or(Error::Infeasible)
}

/// Solver for any number of constraints. Arms with an infinite cost are
/// dropped; if some feasible policy puts mass on an arm with infinite reward,
/// the returned policy maximizes that mass and has value `+∞`.
pub fn solve_support_m1(lp: &SimplexLp) -> Result<LpSolution> {
    lp.validate()?;
    let m = lp.constraints();
    if m == 0 {
        let a = argmax_first(&lp.reward, |_| true).expect("non-empty");
        return Ok(LpSolution {
            policy: SparsePolicy::point(a),
            value: lp.reward[a],
        });
    }
    if lp.tau.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("thresholds must be finite"));
    }
    let kept: Vec<usize> = (0..lp.arms())
        .filter(|&a| lp.cost.iter().all(|row| row[a].is_finite()))
        .collect();
    if kept.is_empty() {
        return Err(Error::Infeasible);
    }
    let restrict = |reward: Vec<f64>, arms: &[usize]| SimplexLp {
        reward,
        cost: lp
            .cost
            .iter()
            .map(|row| arms.iter().map(|&a| row[a]).collect())
            .collect(),
        tau: lp.tau.clone(),
    };
    let lift = |sol: LpSolution, arms: &[usize]| SparsePolicy {
        support: sol.policy.support.iter().map(|&i| arms[i]).collect(),
        weights: sol.policy.weights,
    };

    let infinite: Vec<f64> = kept
        .iter()
        .map(|&a| if lp.reward[a] == f64::INFINITY { 1.0 } else { 0.0 })
        .collect();
    if infinite.iter().any(|&v| v > 0.0) {
        let mass = solve_generic(&restrict(infinite, &kept))?;
        if mass.value > PIVOT_TOL {
            let policy = lift(mass, &kept);
            check_support(&policy, m)?;
            return Ok(LpSolution {
                policy,
                value: f64::INFINITY,
            });
        }
    }
    let finite: Vec<usize> = kept.iter().copied().filter(|&a| lp.reward[a].is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Infeasible);
    }
    let sol = solve_generic(&restrict(finite.iter().map(|&a| lp.reward[a]).collect(), &finite))?;
    let value = sol.value;
    let policy = lift(sol, &finite);
    check_support(&policy, m)?;
    Ok(LpSolution { policy, value })
}

fn check_support(policy: &SparsePolicy, m: usize) -> Result<()> {
    if policy.len() > m + 1 {
        return Err(Error::invalid(format!(
            "basic solution has support {} > m + 1 = {}",
            policy.len(),
            m + 1
        )));
    }
    Ok(())
}

/// Dense two-phase primal simplex with Bland's rule. Inputs must be finite.
pub fn solve_generic(lp: &SimplexLp) -> Result<LpSolution> {
    lp.validate()?;
    if !lp.is_finite() {
        return Err(Error::invalid("generic simplex needs finite coefficients"));
    }
    let k = lp.arms();
    let m = lp.constraints();
    let rows = m + 1;
    // Columns: arms, slacks, artificials (one per row), rhs.
    let n_art = rows;
    let cols = k + m + n_art;
    let mut tab = vec![vec![0.0; cols + 1]; rows];
    for (i, row) in tab.iter_mut().enumerate() {
        if i == 0 {
            row[..k].fill(1.0);
            row[cols] = 1.0;
        } else {
            let sign = if lp.tau[i - 1] < 0.0 { -1.0 } else { 1.0 };
            for a in 0..k {
                row[a] = sign * lp.cost[i - 1][a];
            }
            row[k + i - 1] = sign;
            row[cols] = sign * lp.tau[i - 1];
        }
        row[k + m + i] = 1.0;
    }
    let mut basis: Vec<usize> = (0..rows).map(|i| k + m + i).collect();

    // Phase 1: maximize −Σ artificials.
    let mut phase1 = vec![0.0; cols];
    for j in k + m..cols {
        phase1[j] = -1.0;
    }
    run_simplex(&mut tab, &mut basis, &phase1, cols)?;
    let infeasibility: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= k + m)
        .map(|(i, _)| tab[i][cols])
        .sum();
    if infeasibility > 1e-9 {
        return Err(Error::Infeasible);
    }
    // Drive zero-valued artificials out of the basis where possible.
    for i in 0..rows {
        if basis[i] >= k + m {
            if let Some(j) = (0..k + m).find(|&j| tab[i][j].abs() > 1e-9) {
                pivot(&mut tab, &mut basis, i, j);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..k].copy_from_slice(&lp.reward);
    run_simplex(&mut tab, &mut basis, &phase2, k + m)?;

    let mut dense = vec![0.0; k];
    for (i, &b) in basis.iter().enumerate() {
        if b < k {
            dense[b] = tab[i][cols].max(0.0);
        }
    }
    let policy = SparsePolicy::from_dense(&dense);
    let value = policy.expectation(&lp.reward);
    Ok(LpSolution { policy, value })
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = tab[r][c];
    for v in tab[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = c;
}

/// Maximizes `objᵀx` from the current basic feasible solution. Only columns
/// below `enter_limit` may enter the basis.
fn run_simplex(tab: &mut [Vec<f64>], basis: &mut [usize], obj: &[f64], enter_limit: usize) -> Result<()> {
    let cols = obj.len();
    let rows = tab.len();
    let max_iter = 50 * (rows + cols) + 1000;
    for _ in 0..max_iter {
        // Reduced cost c_j − c_Bᵀ B⁻¹ A_j.
        let entering = (0..enter_limit).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: f64 = (0..rows).map(|i| obj[basis[i]] * tab[i][j]).sum();
            obj[j] - z > 1e-11
        });
        let Some(j) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        let mut tiny = 0.0f64;
        for i in 0..rows {
            let a = tab[i][j];
            if a > PIVOT_TOL {
                let ratio = tab[i][cols] / a;
                let better = match leave {
                    None => true,
                    Some((l, best)) => ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            } else if a > 0.0 {
                tiny = tiny.max(a);
            }
        }
        match leave {
            Some((i, _)) => pivot(tab, basis, i, j),
            None if tiny > 0.0 => return Err(Error::NumericalDegeneracy(tiny)),
            None => return Err(Error::invalid("LP is unbounded")),
        }
    }
    Err(Error::NumericalDegeneracy(0.0))
}
