//! Synthetic scenes with one elementary topological change (ETC).
//!
//! Four parametric surfaces over `(s, t) ∈ [-1, 1]²` minus a tearing curve:
//! exterior partial tear, interior partial tear, simple disconnection and
//! hole disconnection. Every piece is an isometric embedding of its part of
//! the parameter square, so a flat template `(s, t, 0)` is exact.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{apply_rigid, project, Camera, GeometryError, Point2, Point3, RigidTransform};
use crate::sft::CorrespondenceSet;

/// Generated depths are kept above this value by [`default_transforms`].
pub const MIN_DEPTH: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("({s}, {t}) lies within the exclusion band of the tearing curve")]
    OnTearingCurve { s: f64, t: f64 },
    #[error("({s}, {t}) is outside the parameter square")]
    OutOfDomain { s: f64, t: f64 },
    #[error("rejection sampling failed after {attempts} attempts")]
    SamplingFailed { attempts: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EtcKind {
    ExteriorTear,
    InteriorTear,
    SimpleDisconnection,
    HoleDisconnection,
}

impl EtcKind {
    pub const ALL: [EtcKind; 4] =
        [Self::ExteriorTear, Self::InteriorTear, Self::SimpleDisconnection, Self::HoleDisconnection];

    /// Connected components of the torn range.
    pub fn components(self) -> usize {
        match self {
            Self::ExteriorTear | Self::InteriorTear => 1,
            Self::SimpleDisconnection | Self::HoleDisconnection => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ExteriorTear => "ExteriorTear",
            Self::InteriorTear => "InteriorTear",
            Self::SimpleDisconnection => "SimpleDisconnection",
            Self::HoleDisconnection => "HoleDisconnection",
        }
    }

    pub fn tearing_curve(self) -> TearingCurve {
        match self {
            Self::ExteriorTear => TearingCurve::Segment { a: Point2::new(0.0, 0.0), b: Point2::new(0.0, 1.0) },
            Self::InteriorTear | Self::SimpleDisconnection => {
                TearingCurve::Segment { a: Point2::new(0.0, -1.0), b: Point2::new(0.0, 1.0) }
            }
            Self::HoleDisconnection => TearingCurve::Circle { center: Point2::origin(), radius: 0.6 },
        }
    }
}

impl std::fmt::Display for EtcKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EtcKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "exterior" | "exteriortear" => Ok(Self::ExteriorTear),
            "interior" | "interiortear" => Ok(Self::InteriorTear),
            "simple" | "simpledisconnection" => Ok(Self::SimpleDisconnection),
            "hole" | "holedisconnection" => Ok(Self::HoleDisconnection),
            _ => Err(format!("unknown ETC kind `{s}` (expected exterior, interior, simple or hole)")),
        }
    }
}

/// Curve removed from the parameter square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TearingCurve {
    Segment { a: Point2, b: Point2 },
    Circle { center: Point2, radius: f64 },
}

impl TearingCurve {
    pub fn distance(&self, p: &Point2) -> f64 {
        match self {
            Self::Segment { a, b } => {
                let ab = b - a;
                let u = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                (p - (a + ab * u)).norm()
            }
            Self::Circle { center, radius } => ((p - center).norm() - radius).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

impl AngleUnit {
    fn radians(self, x: f64) -> f64 {
        match self {
            Self::Radians => x,
            Self::Degrees => x.to_radians(),
        }
    }
}

/// Rigid motions used by the disconnection surfaces: `q` for the hole,
/// `q1`/`q2` for the two halves of the simple disconnection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EtcTransforms {
    pub q: RigidTransform,
    pub q1: RigidTransform,
    pub q2: RigidTransform,
}

impl EtcTransforms {
    pub fn identity() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtcSpec {
    pub kind: EtcKind,
    pub curve: TearingCurve,
    pub transforms: EtcTransforms,
    pub n_points: usize,
    pub seed: u64,
    pub exclusion_band: f64,
    pub angle_unit: AngleUnit,
}

impl EtcSpec {
    /// Defaults with seeded transforms.
    pub fn new(kind: EtcKind, seed: u64) -> Self {
        Self { transforms: default_transforms(kind, seed), ..Self::identity(kind, seed) }
    }

    /// Defaults with every transform set to the identity.
    pub fn identity(kind: EtcKind, seed: u64) -> Self {
        Self {
            kind,
            curve: kind.tearing_curve(),
            transforms: EtcTransforms::identity(),
            n_points: 100,
            seed,
            exclusion_band: 0.01,
            angle_unit: AngleUnit::Radians,
        }
    }
}

fn surface_unchecked(kind: EtcKind, tr: &EtcTransforms, unit: AngleUnit, s: f64, t: f64) -> (Point3, usize) {
    match kind {
        EtcKind::ExteriorTear => {
            let a = unit.radians(0.8);
            let p = if t <= 0.0 {
                Point3::new(s, t, 2.0)
            } else if s < 0.0 {
                Point3::new(s, a.sin() * t, 2.0 + a.cos() * t)
            } else {
                Point3::new(s, a.sin() * t, 2.0 - a.cos() * t)
            };
            (p, 0)
        }
        EtcKind::InteriorTear => {
            let a = unit.radians(0.75);
            let (c, sn) = (a.cos(), a.sin());
            let z = match (t <= 0.0, s > 0.0) {
                (true, true) => 3.0 + sn * t,
                (false, true) => 3.0 - sn * t,
                (true, false) => 3.0 - sn * (2.0 + t),
                (false, false) => 3.0 - sn * (2.0 - t),
            };
            (Point3::new(s, c * t, z), 0)
        }
        EtcKind::SimpleDisconnection => {
            if s < 0.0 {
                (apply_rigid(&tr.q1, &Point3::new(s - 0.5, t, 1.0)), 0)
            } else {
                (apply_rigid(&tr.q2, &Point3::new(s + 0.5, t, 1.0)), 1)
            }
        }
        EtcKind::HoleDisconnection => {
            if s.hypot(t) > 0.6 {
                (apply_rigid(&tr.q, &Point3::new(s, t, 1.0)), 0)
            } else {
                (apply_rigid(&tr.q, &Point3::new(s, t, 3.0)), 1)
            }
        }
    }
}

/// Evaluates the ETC surface at `(s, t)` and returns the point with its
/// connected-component label.
pub fn etc_surface(spec: &EtcSpec, s: f64, t: f64) -> Result<(Point3, usize), SynthError> {
    if !(s.abs() <= 1.0 && t.abs() <= 1.0) {
        return Err(SynthError::OutOfDomain { s, t });
    }
    if spec.curve.distance(&Point2::new(s, t)) <= spec.exclusion_band {
        return Err(SynthError::OnTearingCurve { s, t });
    }
    Ok(surface_unchecked(spec.kind, &spec.transforms, spec.angle_unit, s, t))
}

/// Untorn plane `Q · (s, t, depth)`, used for no-harm checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub n_points: usize,
    pub seed: u64,
    pub depth: f64,
    pub transform: RigidTransform,
}

impl PlaneSpec {
    pub fn fronto_parallel(seed: u64) -> Self {
        Self { n_points: 100, seed, depth: 2.0, transform: RigidTransform::identity() }
    }

    /// Plane tilted and shifted by a seeded transform.
    pub fn tilted(seed: u64) -> Self {
        let mut rng = transform_rng(seed);
        let transform = sample_transform(&mut rng);
        Self { transform, ..Self::fronto_parallel(seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scene")]
pub enum Scene {
    Etc(EtcSpec),
    Plane(PlaneSpec),
}

impl Scene {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Etc(spec) => spec.kind.name(),
            Self::Plane(_) => "Plane",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Etc(spec) => spec.seed,
            Self::Plane(spec) => spec.seed,
        }
    }
}

/// A generated instance. All lists are index-aligned; `image_points` are
/// retinal (`project(gt)`), `camera` maps them to pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EtcDataset {
    pub scene: Scene,
    pub camera: Camera,
    pub param_points: Vec<Point2>,
    pub gt_points: Vec<Point3>,
    pub template_points: Vec<Point3>,
    pub image_points: Vec<Point2>,
    pub component_labels: Vec<usize>,
}

impl EtcDataset {
    pub fn len(&self) -> usize {
        self.param_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.param_points.is_empty()
    }

    pub fn component_count(&self) -> usize {
        let mut labels = self.component_labels.clone();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    pub fn pixel_points(&self) -> Vec<Point2> {
        self.image_points.iter().map(|p| self.camera.to_pixel(p)).collect()
    }

    pub fn correspondences(&self) -> CorrespondenceSet {
        CorrespondenceSet {
            sources: self.param_points.clone(),
            template_targets: self.template_points.clone(),
            image_targets: self.image_points.clone(),
            units: "AU".into(),
        }
    }
}

fn sample_square(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

fn assemble(
    scene: Scene,
    camera: &Camera,
    samples: Vec<(Point2, Point3, usize)>,
) -> Result<EtcDataset, SynthError> {
    camera.validate()?;
    let mut data = EtcDataset {
        scene,
        camera: *camera,
        param_points: Vec::with_capacity(samples.len()),
        gt_points: Vec::with_capacity(samples.len()),
        template_points: Vec::with_capacity(samples.len()),
        image_points: Vec::with_capacity(samples.len()),
        component_labels: Vec::with_capacity(samples.len()),
    };
    for (p, x, label) in samples {
        data.image_points.push(project(&x)?);
        data.param_points.push(p);
        data.template_points.push(Point3::new(p.x, p.y, 0.0));
        data.gt_points.push(x);
        data.component_labels.push(label);
    }
    Ok(data)
}

/// Samples `n_points` parameters uniformly on the square minus the
/// exclusion band and evaluates the surface.
pub fn gen_etc(spec: &EtcSpec, camera: &Camera) -> Result<EtcDataset, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max_attempts = 10 * spec.n_points;
    let mut samples = Vec::with_capacity(spec.n_points);
    let mut attempts = 0;
    while samples.len() < spec.n_points {
        if attempts >= max_attempts {
            return Err(SynthError::SamplingFailed { attempts });
        }
        attempts += 1;
        let (s, t) = sample_square(&mut rng);
        match etc_surface(spec, s, t) {
            Ok((x, label)) => samples.push((Point2::new(s, t), x, label)),
            Err(SynthError::OnTearingCurve { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    assemble(Scene::Etc(spec.clone()), camera, samples)
}

pub fn gen_plane(spec: &PlaneSpec, camera: &Camera) -> Result<EtcDataset, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samples = (0..spec.n_points)
        .map(|_| {
            let (s, t) = sample_square(&mut rng);
            (Point2::new(s, t), apply_rigid(&spec.transform, &Point3::new(s, t, spec.depth)), 0)
        })
        .collect();
    assemble(Scene::Plane(spec.clone()), camera, samples)
}

fn transform_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn sample_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
    let axis = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let angle = rng.random_range(-0.3..=0.3);
    let translation =
        Vector3::new(rng.random_range(-0.3..=0.3), rng.random_range(-0.3..=0.3), rng.random_range(-0.3..=0.3));
    RigidTransform::from_axis_angle(axis, angle, translation)
}

/// Smallest depth of one surface piece over a dense parameter grid.
fn piece_min_depth(kind: EtcKind, tr: &EtcTransforms, piece: usize) -> f64 {
    let n = 21;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            let t = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            let (p, label) = surface_unchecked(kind, tr, AngleUnit::Radians, s, t);
            if label == piece {
                min = min.min(p.z);
            }
        }
    }
    min
}

/// Seeded small rigid motions for the disconnection kinds (identity for
/// the tears, whose formulas use none). Each motion is resampled until
/// its piece stays deeper than [`MIN_DEPTH`].
pub fn default_transforms(kind: EtcKind, seed: u64) -> EtcTransforms {
    let mut rng = transform_rng(seed);
    let mut out = EtcTransforms::identity();
    let mut draw = |rng: &mut ChaCha8Rng, set: &dyn Fn(&mut EtcTransforms, RigidTransform), pieces: &[usize]| loop {
        let mut candidate = out;
        set(&mut candidate, sample_transform(rng));
        if pieces.iter().all(|&p| piece_min_depth(kind, &candidate, p) > MIN_DEPTH) {
            out = candidate;
            break;
        }
    };
    match kind {
        EtcKind::ExteriorTear | EtcKind::InteriorTear => {}
        EtcKind::SimpleDisconnection => {
            draw(&mut rng, &|t, q| t.q1 = q, &[0]);
            draw(&mut rng, &|t, q| t.q2 = q, &[1]);
        }
        EtcKind::HoleDisconnection => draw(&mut rng, &|t, q| t.q = q, &[0, 1]),
    }
    out
}
