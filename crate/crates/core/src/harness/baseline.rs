//! Simplified safe Thompson-sampling baseline used only as a comparison curve.
//!
//! Samples `θ̃ ~ N(θ̂, (scale·β)² Σ⁻¹)`, keeps the pessimistically feasible part
//! of every ray (the same truncation LC-LUCB uses) and plays the point that
//! maximizes `⟨x, θ̃⟩`. This is not a faithful reproduction of any published
//! safe linear Thompson sampling schedule.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::geometry::{argmax_convex_over_rays, StarConvexSet};
use crate::lc_lucb::{LcLucbStep, LinearValues};
use crate::linalg::Vector;

/// Draws the perturbed parameter `θ̂ + scale·β_r·L⁻ᵀ z`.
pub fn sample_theta(values: &LinearValues, scale: f64, rng: &mut impl Rng) -> Vector {
    let theta = &values.est.theta_hat;
    if scale == 0.0 {
        return theta.clone();
    }
    let z = Vector::from_fn(theta.len(), |_, _| StandardNormal.sample(rng));
    theta + values.est.reward_factor().inv_transpose_mul(&z) * (scale * values.beta_r)
}

/// One baseline decision. The returned `choice.value` is `⟨x, θ̃⟩`.
pub fn safe_ts_step(
    values: &LinearValues,
    set: &StarConvexSet,
    tau: &[f64],
    tol: f64,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<LcLucbStep> {
    let (feasible, alphas) = values.feasible_set(set, tau, tol)?;
    let theta = sample_theta(values, scale, rng);
    let choice = argmax_convex_over_rays(&feasible, |x| x.dot(&theta));
    Ok(LcLucbStep { choice, alphas })
}
