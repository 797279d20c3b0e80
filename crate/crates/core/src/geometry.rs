//! Action sets and the ray primitives used to optimize over finite
//! star-convex sets: truncation at the pessimistic-cost boundary and
//! maximization of a convex value over a union of segments.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, Vector};

pub const BISECTION_TOL: f64 = 1e-7;
pub const BISECTION_MAX_ITER: usize = 60;

/// Union of segments `[x₀, x_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarConvexSet {
    pub center: Vector,
    pub endpoints: Vec<Vector>,
}

impl StarConvexSet {
    pub fn new(center: Vector, endpoints: Vec<Vector>) -> Result<Self> {
        for e in &endpoints {
            check_dim(center.len(), e.len())?;
        }
        Ok(Self { center, endpoints })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `x₀ + α (x_i − x₀)`.
    pub fn point(&self, ray: usize, alpha: f64) -> Vector {
        ray_point(&self.center, &self.endpoints[ray], alpha)
    }
}

/// Finite action list containing the safe action.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSet {
    pub actions: Vec<Vector>,
    pub safe_index: usize,
}

impl DiscreteSet {
    pub fn new(actions: Vec<Vector>, safe_index: usize) -> Result<Self> {
        if actions.is_empty() || safe_index >= actions.len() {
            return Err(Error::invalid(
                "discrete set must be non-empty and contain the safe action",
            ));
        }
        let d = actions[0].len();
        for a in &actions {
            check_dim(d, a.len())?;
        }
        Ok(Self { actions, safe_index })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.actions[0].len()
    }
}

pub fn ray_point(center: &Vector, endpoint: &Vector, alpha: f64) -> Vector {
    center + (endpoint - center) * alpha
}

/// Largest `α ∈ [0, 1]` with `cost(α) ≤ τ`, assuming the feasible part of the
/// ray is an interval containing 0 (true when `cost` is convex and
/// `cost(0) ≤ τ`). Returns a feasible `α` within `tol` of the boundary. If
/// `cost(0) > τ` the ray is collapsed to its center.
pub fn max_feasible_alpha(cost: impl Fn(f64) -> f64, tau: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }
    if cost(1.0) <= tau {
        return Ok(1.0);
    }
    if !(cost(0.0) <= tau) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cost(mid) <= tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// [`max_feasible_alpha`] along the ray from `center` to `endpoint`.
pub fn max_feasible_scale(
    center: &Vector,
    endpoint: &Vector,
    cost_fn: impl Fn(&Vector) -> f64,
    tau: f64,
    tol: f64,
) -> Result<f64> {
    check_dim(center.len(), endpoint.len())?;
    max_feasible_alpha(|a| cost_fn(&ray_point(center, endpoint, a)), tau, tol)
}

/// Shrinks every ray to its pessimistically feasible part.
pub fn truncate_feasible(
    set: &StarConvexSet,
    cost_fn: impl Fn(&Vector) -> f64,
    tau: f64,
    tol: f64,
) -> Result<StarConvexSet> {
    let endpoints = set
        .endpoints
        .iter()
        .map(|e| {
            let a = max_feasible_scale(&set.center, e, &cost_fn, tau, tol)?;
            Ok(ray_point(&set.center, e, a))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StarConvexSet {
        center: set.center.clone(),
        endpoints,
    })
}

/// Which point of a star-convex set was selected.
#[derive(Clone, Debug, PartialEq)]
pub struct RayChoice {
    /// `None` for the center.
    pub ray: Option<usize>,
    pub point: Vector,
    pub value: f64,
}

/// Maximizes a function that is convex on every segment, so only the center
/// and the endpoints need checking. Ties go to the lowest endpoint index, and
/// the center only wins when strictly better than every endpoint.
pub fn argmax_convex_over_rays(set: &StarConvexSet, value_fn: impl Fn(&Vector) -> f64) -> RayChoice {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in set.endpoints.iter().enumerate() {
        let v = value_fn(e);
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let center_value = value_fn(&set.center);
    match best {
        Some((i, v)) if v >= center_value => RayChoice {
            ray: Some(i),
            point: set.endpoints[i].clone(),
            value: v,
        },
        _ => RayChoice {
            ray: None,
            point: set.center.clone(),
            value: center_value,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cost_keeps_whole_ray() {
        let a = max_feasible_scale(&vector(&[0.0, 0.0]), &vector(&[1.0, 0.0]), |_| 0.0, 0.5, 1e-7).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn linear_cost_interpolates() {
        let a = max_feasible_scale(&vector(&[0.0]), &vector(&[1.0]), |x| x[0], 0.4, 1e-7).unwrap();
        assert!((a - 0.4).abs() <= 1e-7);
        assert!(a <= 0.4);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(max_feasible_alpha(|a| a, 0.5, 0.0).is_err());
    }

    #[test]
    fn bisection_matches_grid_scan_for_norm_bonus_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let slope: f64 = rng.random_range(-0.5..1.0);
            let bonus: f64 = rng.random_range(0.1..2.0);
            let curv: f64 = rng.random_range(0.0..1.0);
            let c0: f64 = rng.random_range(0.0..0.2);
            let tau: f64 = rng.random_range(0.3..1.0);
            let cost = |a: f64| c0 + slope * a + bonus * (a * a + curv * a * a * a * a).sqrt();
            let alpha = max_feasible_alpha(cost, tau, BISECTION_TOL).unwrap();
            let n = 1_000_000;
            let mut grid = 0.0;
            for k in 0..=n {
                let a = k as f64 / n as f64;
                if cost(a) <= tau {
                    grid = a;
                } else {
                    break;
                }
            }
            assert!((alpha - grid).abs() <= 2.0 * BISECTION_TOL + 1.0 / n as f64);
        }
    }

    #[test]
    fn truncated_rays_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu = vector(&[0.3, -0.2, 0.8]);
        let cost = |x: &Vector| x.dot(&mu) + 0.4 * x.norm();
        let endpoints: Vec<Vector> = (0..20)
            .map(|_| Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let set = StarConvexSet::new(Vector::zeros(3), endpoints).unwrap();
        let tau = 0.3;
        let t = truncate_feasible(&set, cost, tau, BISECTION_TOL).unwrap();
        for _ in 0..10_000 {
            let i = rng.random_range(0..20);
            let a: f64 = rng.random();
            assert!(cost(&t.point(i, a)) <= tau + BISECTION_TOL);
        }
    }

    #[test]
    fn argmax_linear_picks_best_endpoint() {
        let set = StarConvexSet::new(
            vector(&[0.0, 0.0]),
            vec![vector(&[1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[0.5, 0.5])],
        )
        .unwrap();
        let theta = vector(&[0.2, 0.9]);
        let c = argmax_convex_over_rays(&set, |x| x.dot(&theta));
        assert_eq!(c.ray, Some(1));
    }

    #[test]
    fn argmax_with_norm_bonus_matches_grid() {
        let set = StarConvexSet::new(vector(&[0.1, 0.0]), vec![vector(&[1.0, 0.3]), vector(&[-0.4, 0.9])]).unwrap();
        let theta = vector(&[-0.3, 0.2]);
        let f = |x: &Vector| x.dot(&theta) + 0.7 * (x[0] * x[0] * 2.0 + x[1] * x[1]).sqrt();
        let c = argmax_convex_over_rays(&set, f);
        let mut grid = f64::NEG_INFINITY;
        for i in 0..2 {
            for k in 0..=100_000 {
                grid = grid.max(f(&set.point(i, k as f64 / 100_000.0)));
            }
        }
        assert!((c.value - grid).abs() < 1e-6);
    }

    #[test]
    fn collapsed_rays_return_center() {
        let center = vector(&[0.2, 0.2]);
        let set = StarConvexSet::new(center.clone(), vec![center.clone(), center.clone()]).unwrap();
        let c = argmax_convex_over_rays(&set, |x| x.sum());
        assert_eq!(c.point, center);
        let empty = StarConvexSet::new(center.clone(), vec![]).unwrap();
        assert_eq!(argmax_convex_over_rays(&empty, |x| x.sum()).ray, None);
    }
}
