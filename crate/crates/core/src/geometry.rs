//! Geometric primitives shared by the whole pipeline: points, small matrices,
//! rigid transforms and a pinhole camera.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Rotation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point2 = nalgebra::Point2<f64>;
pub type Point3 = nalgebra::Point3<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Mat3x2 = Matrix3x2<f64>;

/// Tolerance used when validating orthonormality of rotations.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has non-positive depth z = {0}")]
    NonPositiveDepth(f64),
    #[error("rotation is not orthonormal with det +1")]
    InvalidRotation,
    #[error("camera focal lengths must be positive (fx = {fx}, fy = {fy})")]
    InvalidCamera { fx: f64, fy: f64 },
}

/// Perspective projection onto the z = 1 plane.
pub fn project(p: &Point3) -> Result<Point2, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(p.z));
    }
    Ok(Point2::new(p.x / p.z, p.y / p.z))
}

/// Homogeneous lift `(x, y) -> (x, y, 1)`.
#[inline]
pub fn lift(p: &Point2) -> Vector3<f64> {
    Vector3::new(p.x, p.y, 1.0)
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Camera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let cam = Self { fx, fy, cx, cy };
        cam.validate()?;
        Ok(cam)
    }

    /// Identity intrinsics: pixels are retinal coordinates.
    pub fn identity() -> Self {
        Self { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.fx > 0.0 && self.fy > 0.0 && self.cx.is_finite() && self.cy.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::InvalidCamera { fx: self.fx, fy: self.fy })
        }
    }

    /// Maps a retinal point to pixel coordinates.
    pub fn to_pixel(&self, retinal: &Point2) -> Point2 {
        Point2::new(self.fx * retinal.x + self.cx, self.fy * retinal.y + self.cy)
    }
}

/// Maps a pixel measurement to the z = 1 retinal plane.
pub fn normalize_image_point(camera: &Camera, pixel: &Point2) -> Point2 {
    Point2::new((pixel.x - camera.cx) / camera.fx, (pixel.y - camera.cy) / camera.fy)
}

/// Element of SE(3) acting as `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let q = Self { rotation, translation };
        q.validate()?;
        Ok(q)
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation: t }
    }

    /// Rotation by `angle` radians about `axis` followed by translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        Self { rotation: *rotation.matrix(), translation }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho <= ROTATION_TOL && (r.determinant() - 1.0).abs() <= ROTATION_TOL {
            Ok(())
        } else {
            Err(GeometryError::InvalidRotation)
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }
}

pub fn apply_rigid(q: &RigidTransform, p: &Point3) -> Point3 {
    Point3::from(q.rotation * p.coords + q.translation)
}

/// Eigenvalues of a symmetric 2x2 matrix in ascending order.
///
/// The input is symmetrized as `(M + Mᵀ) / 2` first.
pub fn sym_eigvals_2x2(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let radius = half_diff.hypot(b);
    (mean - radius, mean + radius)
}

/// Real eigenvalues of a general 2x2 matrix from its characteristic
/// polynomial, ascending. Returns `None` when the discriminant is negative
/// beyond round-off (complex pair).
pub fn real_eigvals_2x2(m: &Mat2) -> Option<(f64, f64)> {
    let tr = m.trace();
    let det = m.determinant();
    let half = 0.5 * tr;
    let disc = half * half - det;
    let scale = half * half + det.abs();
    let disc = if disc < 0.0 {
        if disc >= -1e-12 * scale {
            0.0
        } else {
            return None;
        }
    } else {
        disc
    };
    let root = disc.sqrt();
    // Avoid cancellation: compute the larger-magnitude root first.
    let big = if half >= 0.0 { half + root } else { half - root };
    let small = if big != 0.0 { det / big } else { 0.0 };
    Some(if big <= small { (big, small) } else { (small, big) })
}

/// Inverse of a 2x2 matrix, `None` when `|det|` is below `rel_tol · ‖m‖²`.
pub fn inverse_2x2(m: &Mat2, rel_tol: f64) -> Option<Mat2> {
    let det = m.determinant();
    let scale = m.norm_squared();
    if !det.is_finite() || det.abs() <= rel_tol * scale || scale == 0.0 {
        return None;
    }
    let inv_det = 1.0 / det;
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) * inv_det)
}

pub fn to_vec2(p: &Point2) -> Vector2<f64> {
    p.coords
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn project_examples() {
        assert_eq!(project(&Point3::new(0.0, 0.0, 1.0)).unwrap(), Point2::new(0.0, 0.0));
        assert_eq!(project(&Point3::new(2.0, 4.0, 2.0)).unwrap(), Point2::new(1.0, 2.0));
        // (s, sin(0.8) t, 2 + cos(0.8) t) at (s, t) = (0.5, 0.5).
        let p = Point3::new(0.5, 0.5 * 0.8f64.sin(), 2.0 + 0.5 * 0.8f64.cos());
        let q = project(&p).unwrap();
        // Frozen from an independent evaluation of the same formula.
        assert_relative_eq!(q.x, 0.2129151471199696, epsilon = 1e-15);
        assert_relative_eq!(q.y, 0.15273597763127816, epsilon = 1e-15);
    }

    #[test]
    fn project_rejects_non_positive_depth() {
        assert_eq!(
            project(&Point3::new(1.0, 1.0, 0.0)),
            Err(GeometryError::NonPositiveDepth(0.0))
        );
        assert!(project(&Point3::new(1.0, 1.0, -2.0)).is_err());
    }

    #[test]
    fn normalize_examples() {
        let p = normalize_image_point(&Camera::identity(), &Point2::new(3.0, 4.0));
        assert_eq!(p, Point2::new(3.0, 4.0));
        let cam = Camera::new(2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(normalize_image_point(&cam, &Point2::new(1.0, 1.0)), Point2::new(0.0, 0.0));
        let cam = Camera::new(500.0, 500.0, 320.0, 240.0).unwrap();
        assert_eq!(normalize_image_point(&cam, &Point2::new(820.0, 240.0)), Point2::new(1.0, 0.0));
        assert!(Camera::new(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rigid_examples() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(apply_rigid(&RigidTransform::identity(), &p), p);
        let t = RigidTransform::translation(Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(apply_rigid(&t, &Point3::new(0.0, 0.0, 1.0)), Point3::new(0.0, 0.0, 2.0));
        let rz = RigidTransform::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2, Vector3::zeros());
        let r = apply_rigid(&rz, &Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(r, Point3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        rz.validate().unwrap();
        let bad = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert_eq!(RigidTransform::new(bad, Vector3::zeros()), Err(GeometryError::InvalidRotation));
    }

    #[test]
    fn eigen_examples() {
        assert_eq!(sym_eigvals_2x2(&Mat2::identity()), (1.0, 1.0));
        assert_eq!(sym_eigvals_2x2(&Mat2::new(2.0, 0.0, 0.0, 5.0)), (2.0, 5.0));
        let (a, b) = sym_eigvals_2x2(&Mat2::new(2.0, 1.0, 1.0, 2.0));
        assert_relative_eq!(a, 1.0, epsilon = 1e-15);
        assert_relative_eq!(b, 3.0, epsilon = 1e-15);
        // Non-symmetric product of SPD matrices has real eigenvalues.
        let m = Mat2::new(2.0, 0.0, 0.0, 1.0) * Mat2::new(2.0, 1.0, 1.0, 2.0);
        let (l1, l2) = real_eigvals_2x2(&m).unwrap();
        assert_relative_eq!(l1 + l2, m.trace(), epsilon = 1e-12);
        assert_relative_eq!(l1 * l2, m.determinant(), epsilon = 1e-12);
        // Rotation has complex eigenvalues.
        assert!(real_eigvals_2x2(&Mat2::new(0.0, -1.0, 1.0, 0.0)).is_none());
    }

    #[test]
    fn inverse_guard() {
        let m = Mat2::new(4.0, 1.0, 2.0, 3.0);
        let inv = inverse_2x2(&m, 1e-12).unwrap();
        assert_relative_eq!(m * inv, Mat2::identity(), epsilon = 1e-14);
        assert!(inverse_2x2(&Mat2::new(1.0, 2.0, 2.0, 4.0), 1e-12).is_none());
    }

    proptest! {
        #[test]
        fn project_inverts_lift(x in -5.0f64..5.0, y in -5.0f64..5.0, z in 1e-3f64..100.0) {
            let p2 = Point2::new(x, y);
            let back = project(&Point3::new(x * z, y * z, z)).unwrap();
            prop_assert!((back - p2).norm() <= 1e-12 * (1.0 + p2.coords.norm()));
        }

        #[test]
        fn rigid_preserves_distances(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0,
            angle in -3.0f64..3.0,
            a in prop::array::uniform3(-10.0f64..10.0),
            b in prop::array::uniform3(-10.0f64..10.0),
            t in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let q = RigidTransform::from_axis_angle(Vector3::new(ax, ay, az), angle, Vector3::from(t));
            prop_assert!(q.validate().is_ok());
            let pa = Point3::from(a);
            let pb = Point3::from(b);
            let d0 = (pa - pb).norm();
            let d1 = (apply_rigid(&q, &pa) - apply_rigid(&q, &pb)).norm();
            prop_assert!((d0 - d1).abs() <= 1e-9);
        }

        #[test]
        fn sym_eig_trace_det(a in -10.0f64..10.0, b in -10.0f64..10.0, d in -10.0f64..10.0) {
            let m = Mat2::new(a, b, b, d);
            let (l1, l2) = sym_eigvals_2x2(&m);
            prop_assert!(l1 <= l2);
            prop_assert!((l1 + l2 - m.trace()).abs() <= 1e-9);
            prop_assert!((l1 * l2 - m.determinant()).abs() <= 1e-9 * (1.0 + m.norm_squared()));
        }
    }
}
