//! Confidence radii and the asymmetric reward/cost scaling parameters.

use crate::error::{Error, Result};

/// Radius parameters shared by the linear algorithms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceSpec {
    /// Sub-Gaussian noise parameter `R`.
    pub noise: f64,
    /// Bound `S` on the parameter norm.
    pub param_bound: f64,
    /// Bound `L` on the action norm.
    pub action_bound: f64,
    /// Ridge regularizer `λ > 0`.
    pub ridge: f64,
    /// Failure probability `δ ∈ (0, 1)`.
    pub delta: f64,
    /// Reward radius scale `α_r`.
    pub alpha_r: f64,
    /// Cost radius scale `α_c`.
    pub alpha_c: f64,
}

impl Default for ConfidenceSpec {
    fn default() -> Self {
        Self {
            noise: 0.1,
            param_bound: 1.0,
            action_bound: 1.0,
            ridge: 1.0,
            delta: 0.05,
            alpha_r: 1.0,
            alpha_c: 1.0,
        }
    }
}

impl ConfidenceSpec {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.ridge > 0.0) {
            return Err(Error::invalid(format!("ridge must be positive, got {}", self.ridge)));
        }
        if self.noise < 0.0 || self.param_bound < 0.0 || self.action_bound <= 0.0 {
            return Err(Error::invalid("noise and norm bounds must be non-negative"));
        }
        if self.alpha_r < 1.0 || self.alpha_c < 1.0 {
            return Err(Error::invalid(format!(
                "scaling parameters must be >= 1, got alpha_r={} alpha_c={}",
                self.alpha_r, self.alpha_c
            )));
        }
        Ok(())
    }

    /// `β_t(δ, d)` for this spec's own `δ`.
    pub fn beta(&self, t: usize, dim: usize) -> f64 {
        beta_unchecked(t, self.delta, dim, self)
    }

    /// Replaces `α_r, α_c` with the values from [`auto_alphas`]; `gap` is the
    /// (minimum) safety gap `τ − c₀`.
    pub fn with_auto_alphas(mut self, r0: f64, gap: f64, mode: AlphaMode) -> Result<Self> {
        let s = auto_alphas_from_gap(r0, gap, mode)?;
        self.alpha_r = s.alpha_r;
        self.alpha_c = s.alpha_c.unwrap_or(1.0);
        Ok(self)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn beta_unchecked(t: usize, delta: f64, dim: usize, spec: &ConfidenceSpec) -> f64 {
    let t = t.max(1) as f64;
    let l2 = spec.action_bound * spec.action_bound;
    let log_term = ((1.0 + (t - 1.0) * l2 / spec.ridge) / delta).ln();
    spec.noise * (dim as f64 * log_term).sqrt() + spec.ridge.sqrt() * spec.param_bound
}

/// Self-normalized ellipsoid radius
/// `β_t(δ, d) = R √(d log((1 + (t−1)L²/λ)/δ)) + √λ S`.
pub fn beta(t: usize, delta: f64, dim: usize, spec: &ConfidenceSpec) -> Result<f64> {
    check_delta(delta)?;
    if t == 0 {
        return Err(Error::invalid("round index starts at 1"));
    }
    Ok(beta_unchecked(t, delta, dim, spec))
}

/// Finite-class least-squares radius `γ(t, δ) = 512 log(24 |G| log(2t) / δ)`.
///
/// This bounds the squared dataset distance `Σ (f̂(X) − f*(X))²`.
pub fn gamma(t: usize, delta: f64, class_size: usize) -> Result<f64> {
    check_delta(delta)?;
    if t == 0 || class_size == 0 {
        return Err(Error::invalid("gamma needs t >= 1 and a non-empty class"));
    }
    let inner = 24.0 * class_size as f64 * (2.0 * t as f64).ln() / delta;
    Ok(512.0 * inner.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaMode {
    HighProb,
    Expectation,
    Mab,
    Nonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingParams {
    pub alpha_r: f64,
    /// `None` for the nonlinear algorithm, which has no cost scale.
    pub alpha_c: Option<f64>,
}

/// Scaling parameters that make the optimistic reward dominate the optimal
/// feasible value despite the pessimistic feasible set.
pub fn auto_alphas(r0: f64, c0: f64, tau: f64, mode: AlphaMode) -> Result<ScalingParams> {
    if c0 >= tau {
        return Err(Error::invalid(format!(
            "safe action is not strictly feasible: c0={c0} >= tau={tau}"
        )));
    }
    auto_alphas_from_gap(r0, tau - c0, mode)
}

/// Multi-constraint version: uses `min_i (τ_i − c₀⁽ⁱ⁾)`.
pub fn auto_alphas_multi(r0: f64, c0: &[f64], tau: &[f64], mode: AlphaMode) -> Result<ScalingParams> {
    auto_alphas_from_gap(r0, min_safety_gap(c0, tau)?, mode)
}

pub fn min_safety_gap(c0: &[f64], tau: &[f64]) -> Result<f64> {
    if c0.len() != tau.len() || c0.is_empty() {
        return Err(Error::invalid("need one safe cost per threshold"));
    }
    let gap = c0.iter().zip(tau).map(|(c, t)| t - c).fold(f64::INFINITY, f64::min);
    if gap <= 0.0 {
        return Err(Error::invalid(format!(
            "safe action is not strictly feasible (min gap {gap})"
        )));
    }
    Ok(gap)
}

fn auto_alphas_from_gap(r0: f64, gap: f64, mode: AlphaMode) -> Result<ScalingParams> {
    if !(0.0..=1.0).contains(&r0) {
        return Err(Error::invalid(format!("safe reward must lie in [0, 1], got {r0}")));
    }
    if gap <= 0.0 {
        return Err(Error::invalid(format!("safety gap must be positive, got {gap}")));
    }
    let params = match mode {
        AlphaMode::HighProb | AlphaMode::Expectation | AlphaMode::Mab => ScalingParams {
            alpha_r: 1.0 + 2.0 * (1.0 - r0) / gap,
            alpha_c: Some(1.0),
        },
        AlphaMode::Nonlinear => ScalingParams {
            alpha_r: (1.0 - r0) / gap,
            alpha_c: None,
        },
    };
    if let Some(alpha_c) = params.alpha_c {
        debug_assert!(optimism_condition(params.alpha_r, alpha_c, r0, gap));
    }
    Ok(params)
}

/// `(1 + α_c)(1 − r₀) ≤ (τ − c₀)(α_r − 1)`, with a relative slack for rounding.
pub fn optimism_condition(alpha_r: f64, alpha_c: f64, r0: f64, gap: f64) -> bool {
    let lhs = (1.0 + alpha_c) * (1.0 - r0);
    let rhs = gap * (alpha_r - 1.0);
    lhs <= rhs + 1e-12 * rhs.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DeltaAllocation {
    /// Each confidence sequence uses the full `δ`.
    #[default]
    PassThrough,
    /// Union bound over the reward and cost sequences: `δ/2` each.
    JointSplit,
}

pub fn per_sequence_delta(delta: f64, allocation: DeltaAllocation) -> f64 {
    match allocation {
        DeltaAllocation::PassThrough => delta,
        DeltaAllocation::JointSplit => delta / 2.0,
    }
}

/// Per-arm confidence level for the multi-armed radius, `δ′ = δ / (4KT)`.
pub fn mab_delta_prime(delta: f64, arms: usize, horizon: usize) -> f64 {
    delta / (4.0 * arms as f64 * horizon as f64)
}

/// Multi-armed radius `β_a(t) = √(2 log(1/δ′) / T_a(t))`.
pub fn mab_radius(pulls: u64, delta_prime: f64) -> f64 {
    (2.0 * (1.0 / delta_prime).ln() / pulls as f64).sqrt()
}

/// `√(2Td log(1 + TL²/λ))`, the elliptical-potential bound on `Σ ‖X_t‖_{Σ_t⁻¹}`.
pub fn elliptical_potential(horizon: usize, dim: usize, spec: &ConfidenceSpec) -> f64 {
    let t = horizon as f64;
    let l2 = spec.action_bound * spec.action_bound;
    (2.0 * t * dim as f64 * (1.0 + t * l2 / spec.ridge).ln()).sqrt()
}

/// High-probability regret bound of LC-LUCB: `α_r β_T(δ, d) √(2Td log(1 + TL²/λ))`.
pub fn lc_lucb_regret_bound(spec: &ConfidenceSpec, dim: usize, horizon: usize) -> f64 {
    spec.alpha_r * spec.beta(horizon, dim) * elliptical_potential(horizon, dim, spec)
}

/// Regret bound of OPLB (holds with probability `1 − 2δ`).
pub fn oplb_regret_bound(spec: &ConfidenceSpec, dim: usize, horizon: usize) -> f64 {
    let beta = spec.beta(horizon, dim);
    let t = horizon as f64;
    let azuma = 2.0 * spec.action_bound * (spec.alpha_r + 1.0) * beta / spec.ridge.sqrt()
        * (2.0 * t * (1.0 / spec.delta).ln()).sqrt();
    azuma + (spec.alpha_r + 1.0) * beta * elliptical_potential(horizon, dim, spec)
}

/// Regret bound of OPB:
/// `(1 + 2(1−r̄₁)/gap)(2√(2KT log(4KT/δ)) + 4√(T log(2/δ) log(4KT/δ)))`.
pub fn opb_regret_bound(r1: f64, gap: f64, arms: usize, horizon: usize, delta: f64) -> f64 {
    let k = arms as f64;
    let t = horizon as f64;
    let l = (4.0 * k * t / delta).ln();
    (1.0 + 2.0 * (1.0 - r1) / gap) * (2.0 * (2.0 * k * t * l).sqrt() + 4.0 * (t * (2.0 / delta).ln() * l).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_spec() -> ConfidenceSpec {
        ConfidenceSpec {
            noise: 1.0,
            param_bound: 1.0,
            action_bound: 1.0,
            ridge: 1.0,
            delta: 0.1,
            alpha_r: 1.0,
            alpha_c: 1.0,
        }
    }

    #[test]
    fn beta_first_round() {
        // √(2 ln 10) + 1, evaluated independently.
        let expected = (2.0 * 10f64.ln()).sqrt() + 1.0;
        let b = beta(1, 0.1, 2, &unit_spec()).unwrap();
        assert!((b - expected).abs() < 1e-14);
        assert!((b - 3.1460).abs() < 1e-4);
    }

    #[test]
    fn beta_noiseless_is_ridge_term() {
        let spec = ConfidenceSpec {
            noise: 0.0,
            ridge: 4.0,
            param_bound: 0.5,
            ..unit_spec()
        };
        for t in [1, 10, 1000] {
            assert_eq!(beta(t, 0.1, 3, &spec).unwrap(), 2.0 * 0.5);
        }
    }

    #[test]
    fn beta_rejects_bad_delta() {
        assert!(beta(1, 0.0, 2, &unit_spec()).is_err());
        assert!(beta(1, 1.0, 2, &unit_spec()).is_err());
    }

    #[test]
    fn gamma_examples() {
        let expected = 512.0 * (24.0 * 4.0 * 2f64.ln() / 0.1).ln();
        let g = gamma(1, 0.1, 4).unwrap();
        assert!((g - expected).abs() < 1e-9);
        assert!((g - 3328.2).abs() < 0.05);
        assert!(gamma(1, 0.999, 1).unwrap() > 0.0);
        assert!(gamma(1, 1.5, 1).is_err());
    }

    #[test]
    fn auto_alpha_examples() {
        let p = auto_alphas(0.0, 0.0, 0.5, AlphaMode::HighProb).unwrap();
        assert_eq!(
            p,
            ScalingParams {
                alpha_r: 5.0,
                alpha_c: Some(1.0)
            }
        );
        let p = auto_alphas(1.0, 0.0, 0.5, AlphaMode::Mab).unwrap();
        assert_eq!(
            p,
            ScalingParams {
                alpha_r: 1.0,
                alpha_c: Some(1.0)
            }
        );
        let p = auto_alphas(0.0, 0.0, 0.5, AlphaMode::Nonlinear).unwrap();
        assert_eq!(p.alpha_r, 2.0);
        assert_eq!(p.alpha_c, None);
        assert!(auto_alphas(0.0, 0.5, 0.5, AlphaMode::HighProb).is_err());
    }

    #[test]
    fn multi_constraint_gap_is_minimum() {
        let p = auto_alphas_multi(0.0, &[0.1, 0.3], &[0.6, 0.5], AlphaMode::HighProb).unwrap();
        assert!((p.alpha_r - (1.0 + 2.0 / 0.2)).abs() < 1e-12);
    }

    #[test]
    fn delta_helpers() {
        assert_eq!(per_sequence_delta(0.1, DeltaAllocation::JointSplit), 0.05);
        assert_eq!(per_sequence_delta(0.1, DeltaAllocation::PassThrough), 0.1);
        assert_eq!(mab_delta_prime(0.4, 4, 10), 0.0025);
    }

    proptest! {
        #[test]
        fn beta_nondecreasing_in_t(
            r in 0.0f64..2.0, s in 0.0f64..3.0, l in 0.1f64..3.0, lambda in 0.1f64..5.0,
            delta in 0.001f64..0.999, d in 1usize..12, t in 1usize..100_000,
        ) {
            let spec = ConfidenceSpec { noise: r, param_bound: s, action_bound: l, ridge: lambda, delta, alpha_r: 1.0, alpha_c: 1.0 };
            prop_assert!(beta(t + 1, delta, d, &spec).unwrap() >= beta(t, delta, d, &spec).unwrap());
            let smaller = delta / 2.0;
            prop_assert!(beta(t, smaller, d, &spec).unwrap() >= beta(t, delta, d, &spec).unwrap());
        }

        #[test]
        fn gamma_increasing(t in 1usize..10_000, g in 1usize..500, delta in 0.001f64..0.999) {
            prop_assert!(gamma(t + 1, delta, g).unwrap() > gamma(t, delta, g).unwrap());
            prop_assert!(gamma(t, delta, g + 1).unwrap() > gamma(t, delta, g).unwrap());
        }

        #[test]
        fn auto_alphas_satisfy_optimism_condition(r0 in 0.0f64..=1.0, c0 in 0.0f64..0.99, width in 0.001f64..1.0) {
            let tau = c0 + width;
            for mode in [AlphaMode::HighProb, AlphaMode::Expectation, AlphaMode::Mab] {
                let p = auto_alphas(r0, c0, tau, mode).unwrap();
                prop_assert!(optimism_condition(p.alpha_r, p.alpha_c.unwrap(), r0, tau - c0));
            }
        }
    }
}
