//! JSON file formats.
//!
//! Coordinates are arrays `[x, y]` or `[x, y, z]`. Floats are written in
//! the shortest form that parses back to the same `f64`, so every file
//! round-trips bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{normalize_image_point, Camera, Point2, Point3};
use crate::refine::RefineConfig;
use crate::sft::{AffineMap2, CorrespondenceSet, KernelConfig};
use crate::synthgen::{EtcDataset, Scene};

pub const FORMAT_VERSION: u32 = 1;

/// Provenance of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    #[serde(flatten)]
    pub scene: Scene,
    pub component_labels: Vec<usize>,
}

/// Correspondences, optionally with ground truth.
///
/// With a camera, `image_targets` are pixels; without one they are
/// normalized retinal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub format_version: u32,
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera>,
    pub sources: Vec<Point2>,
    pub template_targets: Vec<Point3>,
    pub image_targets: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_points: Option<Vec<Point3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<DatasetMetadata>,
}

impl DatasetFile {
    /// Writes pixel coordinates unless the camera is the identity.
    pub fn from_dataset(data: &EtcDataset) -> Self {
        let identity = data.camera == Camera::identity();
        Self {
            format_version: FORMAT_VERSION,
            units: "AU".into(),
            camera: (!identity).then_some(data.camera),
            sources: data.param_points.clone(),
            template_targets: data.template_points.clone(),
            image_targets: if identity { data.image_points.clone() } else { data.pixel_points() },
            gt_points: Some(data.gt_points.clone()),
            metadata: Some(DatasetMetadata {
                scene: data.scene.clone(),
                component_labels: data.component_labels.clone(),
            }),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        let m = self.sources.len();
        if self.template_targets.len() != m || self.image_targets.len() != m {
            return Err(format!(
                "array lengths differ: {} sources, {} template targets, {} image targets",
                m,
                self.template_targets.len(),
                self.image_targets.len()
            ));
        }
        if let Some(gt) = &self.gt_points {
            if gt.len() != m {
                return Err(format!("{} gt points for {} sources", gt.len(), m));
            }
        }
        if let Some(cam) = &self.camera {
            cam.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// Correspondences with image targets in retinal coordinates.
    pub fn correspondences(&self) -> CorrespondenceSet {
        let image_targets = match &self.camera {
            Some(cam) => self.image_targets.iter().map(|p| normalize_image_point(cam, p)).collect(),
            None => self.image_targets.clone(),
        };
        CorrespondenceSet {
            sources: self.sources.clone(),
            template_targets: self.template_targets.clone(),
            image_targets,
            units: self.units.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let file: Self = read_json(path)?;
        file.validate().map_err(|msg| HarnessError::parse(path, msg))?;
        Ok(file)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Refined,
}

/// Optimized control grid of the displacement field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementGrid {
    pub grid_points: Vec<Point2>,
    pub grid_targets: Vec<Point2>,
    pub step_parameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_points: usize,
    pub iterations: usize,
    pub best_iteration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_cost: Option<f64>,
    /// Depth samples that used the interpolated fallback.
    pub fallbacks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
}

/// Output of `reconstruct`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionFile {
    pub format_version: u32,
    pub units: String,
    pub method: Method,
    pub kernels: KernelConfig,
    /// Map from dataset sources to the normalized parametrization.
    pub normalization: AffineMap2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RefineConfig>,
    pub initial_points: Vec<Point3>,
    pub points: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_points: Option<Vec<Point3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<DisplacementGrid>,
    pub summary: Summary,
}

impl ReconstructionFile {
    pub fn validate(&self) -> Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        let n = self.points.len();
        if self.initial_points.len() != n {
            return Err(format!("{} initial points for {} points", self.initial_points.len(), n));
        }
        if self.gt_points.as_ref().is_some_and(|g| g.len() != n) {
            return Err("gt_points length differs from points".into());
        }
        if let Some(d) = &self.displacement {
            if d.grid_points.len() != d.grid_targets.len() {
                return Err("displacement grid and targets differ in length".into());
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let file: Self = read_json(path)?;
        file.validate().map_err(|msg| HarnessError::parse(path, msg))?;
        Ok(file)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::parse(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::parse(path, e))
}

/// Fails with [`HarnessError::Clobber`] if `path` exists and `force` is off.
pub fn check_clobber(path: &Path, force: bool) -> Result<(), HarnessError> {
    if !force && path.exists() {
        return Err(HarnessError::Clobber(path.to_path_buf()));
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str, force: bool) -> Result<(), HarnessError> {
    check_clobber(path, force)?;
    fs::write(path, text).map_err(|e| HarnessError::Write { path: path.to_path_buf(), msg: e.to_string() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, force: bool) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Write { path: path.to_path_buf(), msg: e.to_string() })?;
    text.push('\n');
    write_text(path, &text, force)
}

/// `out.json` -> `out.trace.json`.
pub fn default_trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "reconstruction".into());
    out.with_file_name(format!("{stem}.trace.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_etc, EtcKind, EtcSpec};

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let cam = Camera::new(512.3, 498.7, 320.1, 241.9).unwrap();
        let data = gen_etc(&EtcSpec::new(EtcKind::HoleDisconnection, 5), &cam).unwrap();
        let file = DatasetFile::from_dataset(&data);
        let text = serde_json::to_string_pretty(&file).unwrap();
        let back: DatasetFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        for (a, b) in back.gt_points.unwrap().iter().zip(&data.gt_points) {
            assert_eq!(a.coords.map(f64::to_bits), b.coords.map(f64::to_bits));
        }
        let corrs = file.correspondences();
        for (u, p) in corrs.image_targets.iter().zip(&data.image_points) {
            assert!((u - p).norm() <= 1e-12);
        }
    }

    #[test]
    fn coordinates_are_plain_arrays() {
        let data = gen_etc(&EtcSpec::new(EtcKind::ExteriorTear, 1), &Camera::identity()).unwrap();
        let value = serde_json::to_value(DatasetFile::from_dataset(&data)).unwrap();
        assert!(value.get("camera").is_none());
        assert_eq!(value["sources"][0].as_array().unwrap().len(), 2);
        assert_eq!(value["gt_points"][0].as_array().unwrap().len(), 3);
        assert_eq!(value["metadata"]["kind"], "ExteriorTear");
    }

    #[test]
    fn validation_rejects_mismatched_lengths() {
        let data = gen_etc(&EtcSpec::new(EtcKind::InteriorTear, 1), &Camera::identity()).unwrap();
        let mut file = DatasetFile::from_dataset(&data);
        file.image_targets.pop();
        assert!(file.validate().is_err());
        let mut file = DatasetFile::from_dataset(&data);
        file.format_version = 7;
        assert!(file.validate().is_err());
    }

    #[test]
    fn trace_path() {
        assert_eq!(default_trace_path(Path::new("/tmp/r.json")), PathBuf::from("/tmp/r.trace.json"));
    }
}
