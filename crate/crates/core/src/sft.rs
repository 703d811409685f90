//! Classical isometric Shape-from-Template.
//!
//! Given correspondences between a parametrization space `P`, the template
//! `T` and the retinal image `J`, fit the warps `η: P -> J` and
//! `Δ: P -> T`, evaluate the closed-form isometric depth `γ₀` and build
//! the surface `φ(p) = η̃(p) γ(p)`. Also hosts the pointwise isometry error
//! used by the refinement.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{inverse_2x2, lift, real_eigvals_2x2, sym_eigvals_2x2, Mat2, Mat3x2, Point2, Point3};
use crate::warps::{CenterPolicy, KernelKind, RbfSystem, Warp, WarpError};

/// Condition-number guard for the inner matrix of the depth closed form.
pub const MAX_INNER_CONDITION: f64 = 1e12;

/// Relative determinant guard for 2x2 metric inversions.
pub const METRIC_DET_TOL: f64 = 1e-14;

/// Displaced depth lookups must stay inside `[-DOMAIN_LIMIT, DOMAIN_LIMIT]²`.
pub const DOMAIN_LIMIT: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SftError {
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("degenerate sources: {0}")]
    DegenerateSources(String),
    #[error("correspondence lists differ in length ({sources}, {template}, {image})")]
    LengthMismatch { sources: usize, template: usize, image: usize },
    #[error("inner depth matrix is singular (condition {condition:e})")]
    SingularInnerMatrix { condition: f64 },
    #[error("depth closed form has non-positive smallest eigenvalue {0}")]
    NegativeEigenvalue(f64),
    #[error("template metric is singular")]
    SingularTemplateMetric,
    #[error("reconstruction metric is singular")]
    SingularReconstructionMetric,
    #[error("displaced point {0} is outside the parametrization domain")]
    DisplacedOutOfDomain(Point2),
    #[error("interpolated depth {0} is not positive")]
    NonPositiveDepth(f64),
    #[error("at source {index}: {source}")]
    AtSource {
        index: usize,
        #[source]
        source: Box<SftError>,
    },
}

impl SftError {
    fn at(self, index: usize) -> Self {
        Self::AtSource { index, source: Box::new(self) }
    }

    /// Failures the closed form signals for a single point, which callers
    /// may skip or route to a fallback.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            Self::SingularInnerMatrix { .. }
                | Self::NegativeEigenvalue(_)
                | Self::SingularTemplateMetric
                | Self::SingularReconstructionMetric
                | Self::Warp(WarpError::AtCenterSingularity { .. })
        )
    }
}

/// Matched source, template and retinal image keypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pub sources: Vec<Point2>,
    pub template_targets: Vec<Point3>,
    pub image_targets: Vec<Point2>,
    pub units: String,
}

impl CorrespondenceSet {
    pub fn new(
        sources: Vec<Point2>,
        template_targets: Vec<Point3>,
        image_targets: Vec<Point2>,
        units: impl Into<String>,
    ) -> Result<Self, SftError> {
        let set = Self { sources, template_targets, image_targets, units: units.into() };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn validate(&self) -> Result<(), SftError> {
        let (m, t, i) = (self.sources.len(), self.template_targets.len(), self.image_targets.len());
        if m != t || m != i {
            return Err(SftError::LengthMismatch { sources: m, template: t, image: i });
        }
        if m < 3 {
            return Err(SftError::DegenerateSources(format!("need at least 3 correspondences, got {m}")));
        }
        Ok(())
    }
}

/// Uniform scale plus translation, `p -> scale · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub scale: f64,
    pub translation: Vector2<f64>,
}

impl AffineMap2 {
    pub fn identity() -> Self {
        Self { scale: 1.0, translation: Vector2::zeros() }
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        Point2::from(p.coords * self.scale + self.translation)
    }

    pub fn invert(&self, p: &Point2) -> Point2 {
        Point2::from((p.coords - self.translation) / self.scale)
    }
}

/// Maps the sources into `[-1, 1]²`, centering the bounding box and
/// preserving aspect ratio.
pub fn normalize_sources(corrs: &CorrespondenceSet) -> Result<(CorrespondenceSet, AffineMap2), SftError> {
    corrs.validate()?;
    let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
    for p in &corrs.sources {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    let extent = (hi - lo).max();
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(SftError::DegenerateSources("bounding box has zero extent".into()));
    }
    let scale = 2.0 / extent;
    let center = (lo + hi) * 0.5;
    let map = AffineMap2 { scale, translation: -center * scale };
    let mut out = corrs.clone();
    for p in &mut out.sources {
        *p = map.apply(p);
    }
    Ok((out, map))
}

/// Closed-form isometric depth from the warp derivatives at one point:
/// `sqrt(λ_min(J_Δᵀ J_Δ (J_ηᵀ J_η − J_ηᵀ η ηᵀ J_η / ‖η̃‖²)⁻¹))`.
pub fn depth_from_jacobians(j_delta: &Mat3x2, eta: &Point2, j_eta: &Mat2) -> Result<f64, SftError> {
    let lifted_norm2 = eta.coords.norm_squared() + 1.0;
    let jte = j_eta.transpose() * eta.coords;
    let inner = j_eta.transpose() * j_eta - jte * jte.transpose() / lifted_norm2;
    let (lo, hi) = sym_eigvals_2x2(&inner);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_INNER_CONDITION) {
        return Err(SftError::SingularInnerMatrix { condition });
    }
    let inner_inv = inverse_2x2(&inner, 0.0).ok_or(SftError::SingularInnerMatrix { condition })?;
    let m = j_delta.transpose() * j_delta * inner_inv;
    let (smallest, _) = real_eigvals_2x2(&m).ok_or(SftError::NegativeEigenvalue(f64::NAN))?;
    if !(smallest > 0.0) {
        return Err(SftError::NegativeEigenvalue(smallest));
    }
    Ok(smallest.sqrt())
}

/// Depth `γ(p)` from fitted warps. Linear-basis centers use the symmetric
/// derivative, so sources themselves are evaluable.
pub fn depth_gamma(delta: &Warp, eta: &Warp, p: &Point2) -> Result<f64, SftError> {
    let j_delta = delta.jacobian3(p, CenterPolicy::SymmetricAtCenter)?;
    let j_eta = eta.jacobian2(p, CenterPolicy::SymmetricAtCenter)?;
    depth_from_jacobians(&j_delta, &eta.eval2(p), &j_eta)
}

/// Kernels for each fitted map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub eta: KernelKind,
    pub delta: KernelKind,
    pub phi: KernelKind,
    /// Diagonal ridge added to the η and Δ systems (0 = exact).
    pub ridge: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { eta: KernelKind::Tps, delta: KernelKind::Tps, phi: KernelKind::Tps, ridge: 0.0 }
    }
}

/// How a depth sample was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub value: f64,
    /// True when the closed form failed and the interpolated source depths
    /// were used instead.
    pub fallback: bool,
}

/// A 2D field that re-indexes the depth lookup.
pub trait Displacement {
    fn displacement_at(&self, p: &Point2) -> Vector2<f64>;
}

impl Displacement for Vector2<f64> {
    fn displacement_at(&self, _p: &Point2) -> Vector2<f64> {
        *self
    }
}

/// Initial (or displacement-modified) reconstruction and everything needed
/// to evaluate it away from the sources.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    sources: Vec<Point2>,
    eta: Warp,
    delta: Warp,
    /// `[η, Δ]` stacked when both share a kernel, for single-pass depth.
    eta_delta: Option<Warp>,
    lifted: Vec<Vector3<f64>>,
    gamma0: Vec<f64>,
    gamma0_interp: Warp,
    phi_system: RbfSystem,
    phi: Warp,
    points: Vec<Point3>,
    kernels: KernelConfig,
    fallbacks: usize,
}

/// Fits the warps, evaluates `γ₀` at every source and fits `φ₀`.
///
/// `corrs` is expected to be normalized already (see [`normalize_sources`]).
pub fn reconstruct_initial(corrs: &CorrespondenceSet, kernels: KernelConfig) -> Result<Reconstruction, SftError> {
    corrs.validate()?;
    let sources = corrs.sources.clone();
    let eta = RbfSystem::with_ridge(&sources, kernels.eta, kernels.ridge)?.fit(&corrs.image_targets)?;
    let delta = RbfSystem::with_ridge(&sources, kernels.delta, kernels.ridge)?.fit(&corrs.template_targets)?;
    let lifted: Vec<Vector3<f64>> = sources.iter().map(|p| lift(&eta.eval2(p))).collect();
    let gamma0 = sources
        .iter()
        .enumerate()
        .map(|(i, p)| depth_gamma(&delta, &eta, p).map_err(|e| e.at(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let gamma0_interp = Warp::fit(&sources, &gamma0, KernelKind::Tps)?;
    let phi_system = RbfSystem::new(&sources, kernels.phi)?;
    let points: Vec<Point3> = lifted.iter().zip(&gamma0).map(|(l, g)| Point3::from(l * *g)).collect();
    let phi = phi_system.fit(&points)?;
    Ok(Reconstruction {
        sources,
        eta_delta: Warp::stack(&[&eta, &delta]),
        eta,
        delta,
        lifted,
        gamma0,
        gamma0_interp,
        phi_system,
        phi,
        points,
        kernels,
        fallbacks: 0,
    })
}

impl Reconstruction {
    pub fn sources(&self) -> &[Point2] {
        &self.sources
    }

    pub fn eta(&self) -> &Warp {
        &self.eta
    }

    pub fn delta(&self) -> &Warp {
        &self.delta
    }

    pub fn phi(&self) -> &Warp {
        &self.phi
    }

    pub fn kernels(&self) -> KernelConfig {
        self.kernels
    }

    /// `γ₀` at the sources.
    pub fn gamma0_samples(&self) -> &[f64] {
        &self.gamma0
    }

    /// `η̃(p_i)` at the sources.
    pub fn lifted_sources(&self) -> &[Vector3<f64>] {
        &self.lifted
    }

    /// Reconstructed 3D points at the sources.
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Closed-form fallbacks taken when the current points were built.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks
    }

    pub fn phi_system(&self) -> &RbfSystem {
        &self.phi_system
    }

    /// Evaluates `γ₀` anywhere in the domain, falling back to interpolated
    /// source depths where the closed form is degenerate.
    fn closed_form_depth(&self, p: &Point2) -> Result<f64, SftError> {
        let Some(stacked) = &self.eta_delta else {
            return depth_gamma(&self.delta, &self.eta, p);
        };
        let mut value = [0.0; 5];
        let mut jac = [0.0; 10];
        stacked.eval_with_jacobian_into(p, CenterPolicy::SymmetricAtCenter, &mut value, &mut jac)?;
        let eta = Point2::new(value[0], value[1]);
        let j_eta = Mat2::from_row_slice(&jac[..4]);
        let j_delta = Mat3x2::from_row_slice(&jac[4..]);
        depth_from_jacobians(&j_delta, &eta, &j_eta)
    }

    pub fn gamma0_at(&self, p: &Point2) -> Result<DepthSample, SftError> {
        if !(p.x.abs() <= DOMAIN_LIMIT && p.y.abs() <= DOMAIN_LIMIT) {
            return Err(SftError::DisplacedOutOfDomain(*p));
        }
        match self.closed_form_depth(p) {
            Ok(value) => Ok(DepthSample { value, fallback: false }),
            Err(e) if e.is_pointwise() => {
                let value = self.gamma0_interp.eval_scalar(p);
                if value > 0.0 {
                    Ok(DepthSample { value, fallback: true })
                } else {
                    Err(SftError::NonPositiveDepth(value))
                }
            }
            Err(e) => Err(e),
        }
    }

    /// `η̃(p) γ₀(p + d(p))`.
    pub fn modified_point(&self, d: &dyn Displacement, p: &Point2) -> Result<Point3, SftError> {
        let shifted = p + d.displacement_at(p);
        let depth = self.gamma0_at(&shifted)?;
        Ok(Point3::from(lift(&self.eta.eval2(p)) * depth.value))
    }

    /// Rebuilds `φ` from the modified reconstruction at the sources.
    pub fn with_displacement(&self, d: &dyn Displacement) -> Result<Reconstruction, SftError> {
        let mut fallbacks = 0;
        let mut points = Vec::with_capacity(self.sources.len());
        for (i, (p, l)) in self.sources.iter().zip(&self.lifted).enumerate() {
            let shifted = p + d.displacement_at(p);
            let depth = self.gamma0_at(&shifted).map_err(|e| e.at(i))?;
            fallbacks += depth.fallback as usize;
            points.push(Point3::from(l * depth.value));
        }
        let phi = self.phi_system.fit(&points)?;
        Ok(Reconstruction { phi, points, fallbacks, ..self.clone() })
    }

    /// Replaces `φ` by the template parametrization itself.
    pub fn with_phi_equal_to_delta(&self) -> Reconstruction {
        let points: Vec<Point3> = self.sources.iter().map(|p| self.delta.eval3(p)).collect();
        Reconstruction { phi: self.delta.clone(), points, fallbacks: 0, ..self.clone() }
    }

    /// Replaces `φ` by an arbitrary 3D warp (test and diagnostic use).
    pub fn with_phi(&self, phi: Warp) -> Reconstruction {
        let points: Vec<Point3> = self.sources.iter().map(|p| phi.eval3(p)).collect();
        Reconstruction { phi, points, fallbacks: 0, ..self.clone() }
    }
}

/// `η̃(p) γ₀(p + d(p))`.
pub fn modified_reconstruction(recon: &Reconstruction, d: &dyn Displacement, p: &Point2) -> Result<Point3, SftError> {
    recon.modified_point(d, p)
}

/// `(J_Δᵀ J_Δ)⁻¹` or [`SftError::SingularTemplateMetric`].
pub fn template_gram_inverse(j_delta: &Mat3x2) -> Result<Mat2, SftError> {
    inverse_2x2(&(j_delta.transpose() * j_delta), METRIC_DET_TOL).ok_or(SftError::SingularTemplateMetric)
}

/// `E = (J_Δᵀ J_Δ)⁻¹ J_φᵀ J_φ` and its inverse.
pub fn metric_from_jacobians(gram_inv: &Mat2, j_phi: &Mat3x2) -> Result<(Mat2, Mat2), SftError> {
    let e = gram_inv * (j_phi.transpose() * j_phi);
    let e_inv = inverse_2x2(&e, METRIC_DET_TOL).ok_or(SftError::SingularReconstructionMetric)?;
    Ok((e, e_inv))
}

/// `‖E − Id‖²_F + ‖E⁻¹ − Id‖²_F`.
pub fn isometry_error_from_metric(e: &Mat2, e_inv: &Mat2) -> f64 {
    let id = Mat2::identity();
    (e - id).norm_squared() + (e_inv - id).norm_squared()
}

/// Pullback metric of `φ` relative to the template, in parametrization
/// coordinates.
pub fn metric_pair(recon: &Reconstruction, p: &Point2) -> Result<(Mat2, Mat2), SftError> {
    let j_phi = recon.phi.jacobian3(p, CenterPolicy::Strict)?;
    let j_delta = recon.delta.jacobian3(p, CenterPolicy::Strict)?;
    metric_from_jacobians(&template_gram_inverse(&j_delta)?, &j_phi)
}

/// Pointwise isometry error of the current reconstruction at `p`.
pub fn isometry_error(recon: &Reconstruction, p: &Point2) -> Result<f64, SftError> {
    let (e, e_inv) = metric_pair(recon, p)?;
    Ok(isometry_error_from_metric(&e, &e_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fronto_parallel(n: usize, depth: f64, seed: u64) -> CorrespondenceSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources: Vec<Point2> =
            (0..n).map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let template = sources.iter().map(|p| Point3::new(p.x, p.y, 0.0)).collect();
        let image = sources.iter().map(|p| Point2::new(p.x / depth, p.y / depth)).collect();
        CorrespondenceSet::new(sources, template, image, "AU").unwrap()
    }

    #[test]
    fn normalize_examples() {
        let square = |lo: f64, hi: f64, lo_y: f64, hi_y: f64| {
            let sources = vec![
                Point2::new(lo, lo_y),
                Point2::new(hi, lo_y),
                Point2::new(hi, hi_y),
                Point2::new(lo, hi_y),
                Point2::new(0.5 * (lo + hi), 0.5 * (lo_y + hi_y)),
            ];
            let t = sources.iter().map(|p: &Point2| Point3::new(p.x, p.y, 0.0)).collect();
            CorrespondenceSet::new(sources.clone(), t, sources, "AU").unwrap()
        };
        let (out, map) = normalize_sources(&square(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!(map, AffineMap2::identity());
        assert_eq!(out.sources[0], Point2::new(-1.0, -1.0));

        let (_, map) = normalize_sources(&square(0.0, 10.0, 0.0, 10.0)).unwrap();
        assert_relative_eq!(map.scale, 0.2);
        assert_relative_eq!(map.translation, Vector2::new(-1.0, -1.0));

        let (out, map) = normalize_sources(&square(2.0, 4.0, 2.0, 3.0)).unwrap();
        assert_relative_eq!(map.scale, 1.0);
        let ys: Vec<f64> = out.sources.iter().map(|p| p.y).collect();
        assert_relative_eq!(ys.iter().cloned().fold(f64::INFINITY, f64::min), -0.5);
        assert_relative_eq!(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 0.5);
        assert_relative_eq!(map.invert(&out.sources[2]), Point2::new(4.0, 3.0));
    }

    #[test]
    fn normalize_rejects_zero_extent() {
        let p = vec![Point2::new(1.0, 1.0); 3];
        let t = vec![Point3::origin(); 3];
        let set = CorrespondenceSet::new(p.clone(), t, p, "AU").unwrap();
        assert!(matches!(normalize_sources(&set), Err(SftError::DegenerateSources(_))));
    }

    #[test]
    fn depth_on_fronto_parallel_plane() {
        let corrs = fronto_parallel(30, 2.0, 1);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        for p in [Point2::new(0.0, 0.0), Point2::new(0.3, -0.4)] {
            let g = depth_gamma(recon.delta(), recon.eta(), &p).unwrap();
            assert_relative_eq!(g, 2.0, epsilon = 1e-6);
        }
        // Closed form with exact Jacobians.
        let j_delta = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let g = depth_from_jacobians(&j_delta, &Point2::new(0.15, -0.2), &(Mat2::identity() * 0.5)).unwrap();
        assert_relative_eq!(g, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn depth_errors() {
        let j_delta = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let rank1 = Mat2::new(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            depth_from_jacobians(&j_delta, &Point2::origin(), &rank1),
            Err(SftError::SingularInnerMatrix { .. })
        ));
        let zero_template = Mat3x2::zeros();
        assert!(matches!(
            depth_from_jacobians(&zero_template, &Point2::origin(), &Mat2::identity()),
            Err(SftError::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn initial_reconstruction_is_exact_for_plane() {
        let corrs = fronto_parallel(100, 2.0, 9);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        for (p, x) in corrs.sources.iter().zip(recon.points()) {
            assert!((x - Point3::new(p.x, p.y, 2.0)).norm() <= 1e-6);
        }
        let two = CorrespondenceSet {
            sources: corrs.sources[..2].to_vec(),
            template_targets: corrs.template_targets[..2].to_vec(),
            image_targets: corrs.image_targets[..2].to_vec(),
            units: "AU".into(),
        };
        assert!(matches!(reconstruct_initial(&two, KernelConfig::default()), Err(SftError::DegenerateSources(_))));
    }

    #[test]
    fn metric_examples() {
        let corrs = fronto_parallel(40, 2.0, 2);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        let same = recon.with_phi_equal_to_delta();
        let p = Point2::new(0.2, 0.1);
        let (e, e_inv) = metric_pair(&same, &p).unwrap();
        assert_relative_eq!(e, Mat2::identity(), epsilon = 1e-6);
        assert_relative_eq!(e * e_inv, Mat2::identity(), epsilon = 1e-9);
        assert!(isometry_error(&same, &p).unwrap() <= 1e-9);

        let stretched: Vec<Point3> = corrs.sources.iter().map(|p| Point3::new(2.0 * p.x, p.y, 0.0)).collect();
        let phi = Warp::fit(&corrs.sources, &stretched, KernelKind::Tps).unwrap();
        let s = recon.with_phi(phi);
        let (e, _) = metric_pair(&s, &p).unwrap();
        assert_relative_eq!(e, Mat2::new(4.0, 0.0, 0.0, 1.0), epsilon = 1e-6);
        assert_relative_eq!(isometry_error(&s, &p).unwrap(), 9.5625, epsilon = 1e-6);
        // Swapping E and its inverse leaves the error unchanged.
        let (e, e_inv) = metric_pair(&s, &p).unwrap();
        let a = isometry_error_from_metric(&e, &e_inv);
        let b = isometry_error_from_metric(&e_inv, &e);
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn zero_displacement_is_bit_exact() {
        let corrs = fronto_parallel(50, 2.0, 4);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        let zero = Vector2::zeros();
        for (p, x) in recon.sources().iter().zip(recon.points()) {
            assert_eq!(modified_reconstruction(&recon, &zero, p).unwrap(), *x);
        }
        let moved = recon.with_displacement(&zero).unwrap();
        assert_eq!(moved.points(), recon.points());
        // Constant depth: a constant shift changes nothing beyond round-off.
        let shift = Vector2::new(0.05, 0.0);
        for (p, x) in recon.sources().iter().zip(recon.points()) {
            let y = modified_reconstruction(&recon, &shift, p).unwrap();
            assert!((y - x).norm() <= 1e-6);
        }
    }

    #[test]
    fn out_of_domain_displacement() {
        let corrs = fronto_parallel(20, 2.0, 8);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        let far = Vector2::new(5.0, 0.0);
        assert!(matches!(
            modified_reconstruction(&recon, &far, &Point2::new(0.0, 0.0)),
            Err(SftError::DisplacedOutOfDomain(_))
        ));
    }

    #[test]
    fn lbw_kernels_reconstruct() {
        let corrs = fronto_parallel(60, 2.0, 6);
        let kernels = KernelConfig { eta: KernelKind::Lbw, delta: KernelKind::Lbw, ..KernelConfig::default() };
        let recon = reconstruct_initial(&corrs, kernels).unwrap();
        for x in recon.points() {
            assert!((x.z - 2.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn single_pass_depth_matches_separate_warps() {
        let corrs = fronto_parallel(40, 2.0, 11);
        let recon = reconstruct_initial(&corrs, KernelConfig::default()).unwrap();
        for p in [Point2::new(0.13, -0.52), Point2::new(-0.7, 0.64), recon.sources()[0]] {
            let separate = depth_gamma(recon.delta(), recon.eta(), &p).unwrap();
            assert_eq!(recon.gamma0_at(&p).unwrap().value, separate);
        }
    }
}
