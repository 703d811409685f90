//! Radial-basis warps from the plane into R^n (n = 1, 2, 3).
//!
//! A warp is `f(p) = a0 + a1 p.x + a2 p.y + Σ c_i ρ(|p - x_i|)` with the usual
//! side conditions `Σ c_i = 0`, `Σ c_i x_i = 0`. Two kernels are supported:
//! thin-plate spline `ρ(r) = r² ln r` and linear basis `ρ(r) = r`.
//!
//! [`RbfSystem`] holds the factorized interpolation matrix for a fixed set of
//! centers, so refitting against new targets (or evaluating cardinal weights)
//! costs a pair of triangular solves.

use nalgebra::{DMatrix, DVector, Vector2, Vector3, LU};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sym_eigvals_2x2, Mat2, Mat3x2, Point2, Point3};

/// Minimum separation between centers and between a query and a center
/// where the linear-basis gradient is defined.
pub const CENTER_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error("degenerate sources: {0}")]
    DegenerateSources(String),
    #[error("interpolation system is singular")]
    SingularSystem,
    #[error("{sources} sources but {targets} targets")]
    LengthMismatch { sources: usize, targets: usize },
    #[error("linear-basis Jacobian undefined at center {center} (distance {distance:e})")]
    AtCenterSingularity { center: usize, distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Tps,
    Lbw,
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tps" => Ok(Self::Tps),
            "lbw" => Ok(Self::Lbw),
            other => Err(format!("unknown kernel `{other}` (expected tps or lbw)")),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Tps => "tps",
            Self::Lbw => "lbw",
        })
    }
}

impl KernelKind {
    /// Kernel value at radius `r`; `ρ(0) = 0` for both kernels.
    pub fn value(self, r: f64) -> f64 {
        self.value_sq(r * r)
    }

    #[inline]
    fn value_sq(self, r2: f64) -> f64 {
        match self {
            Self::Tps => {
                if r2 > 0.0 {
                    0.5 * r2 * r2.ln()
                } else {
                    0.0
                }
            }
            Self::Lbw => r2.sqrt(),
        }
    }

    /// Factor `g` such that `∇ρ(|p - x|) = g · (p - x)`.
    #[inline]
    fn grad_factor(self, r2: f64) -> Option<f64> {
        match self {
            Self::Tps => Some(if r2 > 0.0 { r2.ln() + 1.0 } else { 0.0 }),
            Self::Lbw => {
                if r2 > CENTER_EPS * CENTER_EPS {
                    Some(1.0 / r2.sqrt())
                } else {
                    None
                }
            }
        }
    }
}

/// What to do when a Jacobian is requested within [`CENTER_EPS`] of a center
/// of a linear-basis warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterPolicy {
    /// Raise [`WarpError::AtCenterSingularity`].
    Strict,
    /// Drop the coincident term. `|p - x_i|` has symmetric one-sided
    /// derivatives at the center whose average is zero.
    SymmetricAtCenter,
}

/// Anything that can serve as an interpolation target.
pub trait WarpTarget {
    const DIM: usize;
    fn write(&self, out: &mut [f64]);
}

impl WarpTarget for f64 {
    const DIM: usize = 1;
    fn write(&self, out: &mut [f64]) {
        out[0] = *self;
    }
}

impl WarpTarget for Point2 {
    const DIM: usize = 2;
    fn write(&self, out: &mut [f64]) {
        out.copy_from_slice(self.coords.as_slice());
    }
}

impl WarpTarget for Vector2<f64> {
    const DIM: usize = 2;
    fn write(&self, out: &mut [f64]) {
        out.copy_from_slice(self.as_slice());
    }
}

impl WarpTarget for Point3 {
    const DIM: usize = 3;
    fn write(&self, out: &mut [f64]) {
        out.copy_from_slice(self.coords.as_slice());
    }
}

impl WarpTarget for Vector3<f64> {
    const DIM: usize = 3;
    fn write(&self, out: &mut [f64]) {
        out.copy_from_slice(self.as_slice());
    }
}

/// Checks the well-posedness conditions on a set of centers.
pub fn validate_sources(sources: &[Point2]) -> Result<(), WarpError> {
    if sources.len() < 3 {
        return Err(WarpError::DegenerateSources(format!(
            "need at least 3 sources, got {}",
            sources.len()
        )));
    }
    if let Some((i, p)) = sources.iter().enumerate().find(|(_, p)| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(WarpError::DegenerateSources(format!("source {i} is not finite: {p}")));
    }
    for i in 0..sources.len() {
        for j in (i + 1)..sources.len() {
            let d = (sources[i] - sources[j]).norm();
            if d <= CENTER_EPS {
                return Err(WarpError::DegenerateSources(format!(
                    "sources {i} and {j} coincide (distance {d:e})"
                )));
            }
        }
    }
    let n = sources.len() as f64;
    let mean = sources.iter().fold(Vector2::zeros(), |acc, p| acc + p.coords) / n;
    let scatter = sources.iter().fold(Mat2::zeros(), |acc, p| {
        let c = p.coords - mean;
        acc + c * c.transpose()
    });
    let (lo, hi) = sym_eigvals_2x2(&scatter);
    if lo <= 1e-12 * hi {
        return Err(WarpError::DegenerateSources("sources are collinear".into()));
    }
    Ok(())
}

/// Factorized interpolation system for fixed centers and kernel.
#[derive(Debug, Clone)]
pub struct RbfSystem {
    kernel: KernelKind,
    centers: Vec<Point2>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl RbfSystem {
    pub fn new(centers: &[Point2], kernel: KernelKind) -> Result<Self, WarpError> {
        Self::with_ridge(centers, kernel, 0.0)
    }

    /// `ridge` is added to the kernel block diagonal; zero gives exact
    /// interpolation.
    pub fn with_ridge(centers: &[Point2], kernel: KernelKind, ridge: f64) -> Result<Self, WarpError> {
        validate_sources(centers)?;
        let m = centers.len();
        let n = m + 3;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..m {
            for j in 0..i {
                let v = kernel.value_sq((centers[i] - centers[j]).norm_squared());
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            a[(i, i)] = ridge;
            let p = &centers[i];
            for (k, v) in [1.0, p.x, p.y].into_iter().enumerate() {
                a[(i, m + k)] = v;
                a[(m + k, i)] = v;
            }
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(WarpError::SingularSystem);
        }
        Ok(Self { kernel, centers: centers.to_vec(), lu })
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn centers(&self) -> &[Point2] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn fit<T: WarpTarget>(&self, targets: &[T]) -> Result<Warp, WarpError> {
        let m = self.centers.len();
        if targets.len() != m {
            return Err(WarpError::LengthMismatch { sources: m, targets: targets.len() });
        }
        let dim = T::DIM;
        let mut rhs = DMatrix::<f64>::zeros(m + 3, dim);
        let mut row = [0.0; 3];
        for (i, t) in targets.iter().enumerate() {
            t.write(&mut row[..dim]);
            for k in 0..dim {
                rhs[(i, k)] = row[k];
            }
        }
        let sol = self.lu.solve(&rhs).ok_or(WarpError::SingularSystem)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(WarpError::SingularSystem);
        }
        let mut coefficients = Vec::with_capacity(m * dim);
        for i in 0..m {
            for k in 0..dim {
                coefficients.push(sol[(i, k)]);
            }
        }
        let mut affine = Vec::with_capacity(3 * dim);
        for r in 0..3 {
            for k in 0..dim {
                affine.push(sol[(m + r, k)]);
            }
        }
        Ok(Warp { kernel: self.kernel, centers: self.centers.clone(), coefficients, affine, dim })
    }

    fn solve_basis(&self, b: DVector<f64>) -> Vec<f64> {
        let m = self.centers.len();
        let w = self.lu.solve(&b).expect("system was checked invertible");
        w.as_slice()[..m].to_vec()
    }

    /// Weights `w_i(p)` with `f(p) = Σ w_i(p) y_i` for any warp fitted on
    /// these centers.
    pub fn cardinal_values(&self, p: &Point2) -> Vec<f64> {
        let m = self.centers.len();
        let mut b = DVector::<f64>::zeros(m + 3);
        for (i, c) in self.centers.iter().enumerate() {
            b[i] = self.kernel.value_sq((p - c).norm_squared());
        }
        b[m] = 1.0;
        b[m + 1] = p.x;
        b[m + 2] = p.y;
        self.solve_basis(b)
    }

    /// Gradients `∇w_i(p)`, so that `J_f(p) = Σ y_i ⊗ ∇w_i(p)`.
    pub fn cardinal_gradients(&self, p: &Point2, policy: CenterPolicy) -> Result<Vec<[f64; 2]>, WarpError> {
        let m = self.centers.len();
        let mut bx = DVector::<f64>::zeros(m + 3);
        let mut by = DVector::<f64>::zeros(m + 3);
        for (i, c) in self.centers.iter().enumerate() {
            let d = p - c;
            let g = match self.kernel.grad_factor(d.norm_squared()) {
                Some(g) => g,
                None => match policy {
                    CenterPolicy::Strict => {
                        return Err(WarpError::AtCenterSingularity { center: i, distance: d.norm() })
                    }
                    CenterPolicy::SymmetricAtCenter => 0.0,
                },
            };
            bx[i] = g * d.x;
            by[i] = g * d.y;
        }
        bx[m + 1] = 1.0;
        by[m + 2] = 1.0;
        let wx = self.solve_basis(bx);
        let wy = self.solve_basis(by);
        Ok(wx.into_iter().zip(wy).map(|(x, y)| [x, y]).collect())
    }
}

/// A fitted radial-basis interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    kernel: KernelKind,
    centers: Vec<Point2>,
    /// Row-major `M × dim`.
    coefficients: Vec<f64>,
    /// Row-major `3 × dim`: constant, x and y rows.
    affine: Vec<f64>,
    dim: usize,
}

impl Warp {
    /// Exact interpolation. See [`RbfSystem`] when several targets share
    /// the same sources.
    pub fn fit<T: WarpTarget>(sources: &[Point2], targets: &[T], kernel: KernelKind) -> Result<Self, WarpError> {
        if sources.len() != targets.len() {
            return Err(WarpError::LengthMismatch { sources: sources.len(), targets: targets.len() });
        }
        RbfSystem::new(sources, kernel)?.fit(targets)
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn centers(&self) -> &[Point2] {
        &self.centers
    }

    pub fn output_dim(&self) -> usize {
        self.dim
    }

    /// Coefficient vector `c_i`.
    pub fn coefficient(&self, i: usize) -> &[f64] {
        &self.coefficients[i * self.dim..(i + 1) * self.dim]
    }

    /// Affine part as `(constant, d/dx, d/dy)` rows.
    pub fn affine_row(&self, r: usize) -> &[f64] {
        &self.affine[r * self.dim..(r + 1) * self.dim]
    }

    /// Largest absolute radial coefficient.
    pub fn max_rbf_coefficient(&self) -> f64 {
        self.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Evaluates into `out` (length `output_dim`).
    pub fn eval_into(&self, p: &Point2, out: &mut [f64]) {
        let dim = self.dim;
        for k in 0..dim {
            out[k] = self.affine[k] + self.affine[dim + k] * p.x + self.affine[2 * dim + k] * p.y;
        }
        for (i, c) in self.centers.iter().enumerate() {
            let v = self.kernel.value_sq((p - c).norm_squared());
            let coef = &self.coefficients[i * dim..(i + 1) * dim];
            for k in 0..dim {
                out[k] += coef[k] * v;
            }
        }
    }

    /// Row-major `output_dim × 2` Jacobian into `out`.
    pub fn jacobian_into(&self, p: &Point2, policy: CenterPolicy, out: &mut [f64]) -> Result<(), WarpError> {
        let dim = self.dim;
        for k in 0..dim {
            out[2 * k] = self.affine[dim + k];
            out[2 * k + 1] = self.affine[2 * dim + k];
        }
        for (i, c) in self.centers.iter().enumerate() {
            let d = p - c;
            let g = match self.kernel.grad_factor(d.norm_squared()) {
                Some(g) => g,
                None => match policy {
                    CenterPolicy::Strict => {
                        return Err(WarpError::AtCenterSingularity { center: i, distance: d.norm() })
                    }
                    CenterPolicy::SymmetricAtCenter => continue,
                },
            };
            let (gx, gy) = (g * d.x, g * d.y);
            let coef = &self.coefficients[i * dim..(i + 1) * dim];
            for k in 0..dim {
                out[2 * k] += coef[k] * gx;
                out[2 * k + 1] += coef[k] * gy;
            }
        }
        Ok(())
    }

    /// Value and Jacobian in one pass over the centers. Results equal
    /// [`Warp::eval_into`] and [`Warp::jacobian_into`].
    pub fn eval_with_jacobian_into(
        &self,
        p: &Point2,
        policy: CenterPolicy,
        value: &mut [f64],
        jac: &mut [f64],
    ) -> Result<(), WarpError> {
        let dim = self.dim;
        for k in 0..dim {
            value[k] = self.affine[k] + self.affine[dim + k] * p.x + self.affine[2 * dim + k] * p.y;
            jac[2 * k] = self.affine[dim + k];
            jac[2 * k + 1] = self.affine[2 * dim + k];
        }
        for (i, c) in self.centers.iter().enumerate() {
            let d = p - c;
            let r2 = d.norm_squared();
            let (v, g) = match self.kernel {
                KernelKind::Tps if r2 > 0.0 => {
                    let l = r2.ln();
                    (0.5 * r2 * l, Some(l + 1.0))
                }
                kernel => (kernel.value_sq(r2), kernel.grad_factor(r2)),
            };
            let coef = &self.coefficients[i * dim..(i + 1) * dim];
            for k in 0..dim {
                value[k] += coef[k] * v;
            }
            let g = match g {
                Some(g) => g,
                None => match policy {
                    CenterPolicy::Strict => {
                        return Err(WarpError::AtCenterSingularity { center: i, distance: d.norm() })
                    }
                    CenterPolicy::SymmetricAtCenter => continue,
                },
            };
            let (gx, gy) = (g * d.x, g * d.y);
            for k in 0..dim {
                jac[2 * k] += coef[k] * gx;
                jac[2 * k + 1] += coef[k] * gy;
            }
        }
        Ok(())
    }

    /// Concatenates the outputs of warps sharing kernel and centers.
    pub fn stack(warps: &[&Warp]) -> Option<Warp> {
        let first = warps.first()?;
        if warps.iter().any(|w| w.kernel != first.kernel || w.centers != first.centers) {
            return None;
        }
        let dim: usize = warps.iter().map(|w| w.dim).sum();
        let m = first.centers.len();
        let mut coefficients = Vec::with_capacity(m * dim);
        for i in 0..m {
            for w in warps {
                coefficients.extend_from_slice(w.coefficient(i));
            }
        }
        let mut affine = Vec::with_capacity(3 * dim);
        for r in 0..3 {
            for w in warps {
                affine.extend_from_slice(w.affine_row(r));
            }
        }
        Some(Warp { kernel: first.kernel, centers: first.centers.clone(), coefficients, affine, dim })
    }

    pub fn eval_scalar(&self, p: &Point2) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut out = [0.0];
        self.eval_into(p, &mut out);
        out[0]
    }

    pub fn eval2(&self, p: &Point2) -> Point2 {
        debug_assert_eq!(self.dim, 2);
        let mut out = [0.0; 2];
        self.eval_into(p, &mut out);
        Point2::new(out[0], out[1])
    }

    pub fn eval3(&self, p: &Point2) -> Point3 {
        debug_assert_eq!(self.dim, 3);
        let mut out = [0.0; 3];
        self.eval_into(p, &mut out);
        Point3::new(out[0], out[1], out[2])
    }

    pub fn jacobian2(&self, p: &Point2, policy: CenterPolicy) -> Result<Mat2, WarpError> {
        debug_assert_eq!(self.dim, 2);
        let mut out = [0.0; 4];
        self.jacobian_into(p, policy, &mut out)?;
        Ok(Mat2::from_row_slice(&out))
    }

    pub fn jacobian3(&self, p: &Point2, policy: CenterPolicy) -> Result<Mat3x2, WarpError> {
        debug_assert_eq!(self.dim, 3);
        let mut out = [0.0; 6];
        self.jacobian_into(p, policy, &mut out)?;
        Ok(Mat3x2::from_row_slice(&out))
    }
}

/// Fits an exact interpolant of `targets` at `sources`.
pub fn fit_warp<T: WarpTarget>(sources: &[Point2], targets: &[T], kernel: KernelKind) -> Result<Warp, WarpError> {
    Warp::fit(sources, targets, kernel)
}

pub fn eval_warp(w: &Warp, p: &Point2) -> DVector<f64> {
    let mut out = DVector::zeros(w.output_dim());
    w.eval_into(p, out.as_mut_slice());
    out
}

/// Analytic `output_dim × 2` Jacobian; errors within [`CENTER_EPS`] of a
/// linear-basis center.
pub fn warp_jacobian(w: &Warp, p: &Point2) -> Result<DMatrix<f64>, WarpError> {
    let mut out = vec![0.0; 2 * w.output_dim()];
    w.jacobian_into(p, CenterPolicy::Strict, &mut out)?;
    Ok(DMatrix::from_row_slice(w.output_dim(), 2, &out))
}
