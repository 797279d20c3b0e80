//! Small dense linear algebra for the confidence-ellipsoid machinery.
//!
//! Vectors and matrices are backed by `nalgebra`. Gram matrices are wrapped in
//! [`PsdMatrix`] so the symmetric positive (semi-)definite invariant travels with
//! the type. Solves go through a Cholesky factorization; a failed factorization
//! is reported as [`Error::NotPositiveDefinite`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Relative symmetry tolerance for Gram matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative residual tolerance for `solve_psd`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Absolute tolerance for `<x_perp, e0> == 0`.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub symmetry: f64,
    pub residual: f64,
    pub orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: SYMMETRY_TOL,
            residual: RESIDUAL_TOL,
            orthogonality: ORTHOGONALITY_TOL,
        }
    }
}

pub fn vector(entries: &[f64]) -> Vector {
    Vector::from_column_slice(entries)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Symmetric matrix, positive definite whenever it carries a ridge term.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdMatrix(DMatrix<f64>);

impl PsdMatrix {
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        PsdMatrix(DMatrix::identity(dim, dim) * scale)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        PsdMatrix(DMatrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    /// Wraps `m` after checking it is square and symmetric to within
    /// [`SYMMETRY_TOL`] relative to its largest entry.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(PsdMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// In-place `Σ += x xᵀ`.
    pub fn rank_one_update(&mut self, x: &Vector) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        self.0.ger(1.0, x, x, 1.0);
        Ok(())
    }

    /// `xᵀ Σ x`, i.e. the squared `Σ`-weighted norm.
    pub fn quadratic_form(&self, x: &Vector) -> f64 {
        x.dot(&(&self.0 * x))
    }

    pub fn factor(&self) -> Result<Factor> {
        self.0.clone().cholesky().map(Factor).ok_or(Error::NotPositiveDefinite)
    }
}

/// Cholesky factor `Σ = L Lᵀ`, reused for several solves within one round.
#[derive(Clone, Debug)]
pub struct Factor(Cholesky<f64, Dyn>);

impl Factor {
    pub fn solve(&self, b: &Vector) -> Vector {
        self.0.solve(b)
    }

    /// `‖x‖_{Σ⁻¹} = √(xᵀ Σ⁻¹ x)`, computed as `‖L⁻¹ x‖`.
    pub fn inv_norm(&self, x: &Vector) -> f64 {
        let mut y = x.clone();
        self.0.l_dirty().solve_lower_triangular_mut(&mut y);
        y.norm()
    }

    /// Returns `L⁻ᵀ z`; if `z` is standard normal the result has covariance `Σ⁻¹`.
    pub fn inv_transpose_mul(&self, z: &Vector) -> Vector {
        let l = self.0.l();
        l.transpose()
            .solve_upper_triangular(z)
            .expect("cholesky factor has a positive diagonal")
    }
}

/// Returns `Σ + x xᵀ`.
pub fn gram_update(sigma: &PsdMatrix, x: &Vector) -> Result<PsdMatrix> {
    let mut out = sigma.clone();
    out.rank_one_update(x)?;
    Ok(out)
}

/// Solves `Σ v = b` for positive definite `Σ`.
pub fn solve_psd(sigma: &PsdMatrix, b: &Vector) -> Result<Vector> {
    check_dim(sigma.dim(), b.len())?;
    let v = sigma.factor()?.solve(b);
    let residual = (sigma.as_matrix() * &v - b).norm();
    if residual > RESIDUAL_TOL * b.norm().max(f64::MIN_POSITIVE) && residual > RESIDUAL_TOL {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(v)
}

/// `‖x‖_{Σ⁻¹}`.
pub fn weighted_norm(x: &Vector, sigma: &PsdMatrix) -> Result<f64> {
    check_dim(sigma.dim(), x.len())?;
    Ok(sigma.factor()?.inv_norm(x))
}

/// Splits `x` into its component along the unit safe direction `e0` and the
/// orthogonal remainder. `None` stands for a zero safe action, in which case the
/// safe subspace is empty and the whole vector is orthogonal.
pub fn project_safe(x: &Vector, e0: Option<&Vector>) -> (Vector, Vector) {
    match e0 {
        None => (Vector::zeros(x.len()), x.clone()),
        Some(e0) => {
            let x_o = e0 * x.dot(e0);
            let x_perp = x - &x_o;
            (x_o, x_perp)
        }
    }
}

/// `Σ_perp + λ e0 e0ᵀ`: regularizes the null direction of the projected Gram
/// matrix so a Cholesky solve applies. Inert for vectors orthogonal to `e0`.
pub fn augment_perp(sigma_perp: &PsdMatrix, e0: Option<&Vector>, lambda: f64) -> Result<PsdMatrix> {
    match e0 {
        None => Ok(sigma_perp.clone()),
        Some(e0) => {
            check_dim(sigma_perp.dim(), e0.len())?;
            let mut m = sigma_perp.as_matrix().clone();
            m.ger(lambda, e0, e0, 1.0);
            Ok(PsdMatrix(m))
        }
    }
}

/// Pseudo-inverse weighted norm `‖x_perp‖_{(Σ_perp)^†}` restricted to the
/// orthogonal complement of `e0`.
pub fn perp_pinv_norm(x_perp: &Vector, sigma_perp: &PsdMatrix, e0: Option<&Vector>, lambda: f64) -> Result<f64> {
    check_dim(sigma_perp.dim(), x_perp.len())?;
    if let Some(e0) = e0 {
        let along = x_perp.dot(e0);
        if along.abs() > ORTHOGONALITY_TOL * x_perp.norm().max(1.0) {
            return Err(Error::NotOrthogonal(along));
        }
    }
    let augmented = augment_perp(sigma_perp, e0, lambda)?;
    let v = solve_psd(&augmented, x_perp)?;
    Ok(x_perp.dot(&v).max(0.0).sqrt())
}
