//! Command implementations, independent of argument parsing.

use std::fmt;
use std::path::{Path, PathBuf};

use super::benchmark::{run_benchmark, BenchmarkOptions, BenchmarkReport};
use super::config::Settings;
use super::export::{to_csv, to_ply, to_svg, ExportFormat, View};
use super::io::{
    check_clobber, default_trace_path, write_json, write_text, DatasetFile, DisplacementGrid, Method,
    ReconstructionFile, Summary, FORMAT_VERSION,
};
use super::metrics::{improvement_pct, rmse};
use super::HarnessError;
use crate::geometry::{Camera, Point2};
use crate::refine::{refine, RefineConfig, Refinement};
use crate::sft::{normalize_sources, reconstruct_initial, AffineMap2, CorrespondenceSet, KernelConfig, Reconstruction};
use crate::synthgen::{gen_etc, AngleUnit, EtcKind, EtcSpec};

pub struct PipelineOutput {
    pub normalization: AffineMap2,
    pub initial: Reconstruction,
    pub refinement: Option<Refinement>,
}

/// Normalizes the sources, computes the initial reconstruction and, with
/// a config, refines it.
pub fn run_pipeline(
    corrs: &CorrespondenceSet,
    kernels: KernelConfig,
    refine_cfg: Option<&RefineConfig>,
) -> Result<PipelineOutput, HarnessError> {
    let (normalized, normalization) = normalize_sources(corrs)?;
    let initial = reconstruct_initial(&normalized, kernels)?;
    let refinement = refine_cfg.map(|cfg| refine(&initial, cfg)).transpose()?;
    Ok(PipelineOutput { normalization, initial, refinement })
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub kind: EtcKind,
    pub seed: u64,
    pub out: PathBuf,
    pub force: bool,
    pub n_points: usize,
    pub identity_transforms: bool,
    pub angle_unit: AngleUnit,
    pub exclusion_band: f64,
    pub camera: Camera,
}

impl GenerateArgs {
    pub fn new(kind: EtcKind, seed: u64, out: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            seed,
            out: out.into(),
            force: false,
            n_points: 100,
            identity_transforms: false,
            angle_unit: AngleUnit::Radians,
            exclusion_band: 0.01,
            camera: Camera::identity(),
        }
    }
}

pub fn generate(args: &GenerateArgs) -> Result<DatasetFile, HarnessError> {
    check_clobber(&args.out, args.force)?;
    let base = if args.identity_transforms {
        EtcSpec::identity(args.kind, args.seed)
    } else {
        EtcSpec::new(args.kind, args.seed)
    };
    let spec = EtcSpec {
        n_points: args.n_points,
        angle_unit: args.angle_unit,
        exclusion_band: args.exclusion_band,
        ..base
    };
    let file = DatasetFile::from_dataset(&gen_etc(&spec, &args.camera)?);
    write_json(&args.out, &file, args.force)?;
    Ok(file)
}

#[derive(Debug, Clone)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Defaults to `<out stem>.trace.json` next to `out`.
    pub trace: Option<PathBuf>,
    pub force: bool,
    pub skip_refine: bool,
    pub settings: Settings,
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<ReconstructionFile, HarnessError> {
    let cfg = args.settings.refine_config()?;
    let kernels = args.settings.kernels();
    let trace_path = args.trace.clone().unwrap_or_else(|| default_trace_path(&args.out));
    check_clobber(&args.out, args.force)?;
    if !args.skip_refine {
        check_clobber(&trace_path, args.force)?;
    }
    let dataset = DatasetFile::read(&args.input)?;
    let corrs = dataset.correspondences();
    let out = run_pipeline(&corrs, kernels, (!args.skip_refine).then_some(&cfg))?;

    let initial_points = out.initial.points().to_vec();
    let gt = dataset.gt_points.as_deref();
    let score = |pts: &[crate::geometry::Point3]| gt.map(|g| rmse(pts, g)).transpose();
    let metric = |e: super::metrics::MetricError| HarnessError::parse(&args.input, e);
    let (method, points, displacement, summary, config) = match &out.refinement {
        None => {
            let summary = Summary {
                n_points: initial_points.len(),
                iterations: 0,
                best_iteration: 0,
                initial_cost: None,
                best_cost: None,
                fallbacks: out.initial.fallback_count(),
                initial_rmse: score(&initial_points).map_err(metric)?,
                rmse: score(&initial_points).map_err(metric)?,
            };
            (Method::Baseline, initial_points.clone(), None, summary, None)
        }
        Some(r) => {
            let points = r.reconstruction.points().to_vec();
            let displacement = DisplacementGrid {
                grid_points: r.field.grid_points().to_vec(),
                grid_targets: r.field.grid_targets().iter().map(|t| Point2::from(*t)).collect(),
                step_parameter: r.trace.step_parameter,
            };
            let summary = Summary {
                n_points: points.len(),
                iterations: r.trace.iterations(),
                best_iteration: r.trace.best_iteration,
                initial_cost: r.trace.costs.first().copied(),
                best_cost: Some(r.trace.best_cost()),
                fallbacks: r.reconstruction.fallback_count(),
                initial_rmse: score(&initial_points).map_err(metric)?,
                rmse: score(&points).map_err(metric)?,
            };
            write_json(&trace_path, &r.trace, args.force)?;
            (Method::Refined, points, Some(displacement), summary, Some(cfg))
        }
    };
    let file = ReconstructionFile {
        format_version: FORMAT_VERSION,
        units: dataset.units.clone(),
        method,
        kernels,
        normalization: out.normalization,
        config,
        initial_points,
        points,
        gt_points: dataset.gt_points.clone(),
        displacement,
        summary,
    };
    write_json(&args.out, &file, args.force)?;
    Ok(file)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub method: Method,
    pub initial_rmse: f64,
    pub rmse: f64,
}

impl Evaluation {
    pub fn improvement_pct(&self) -> f64 {
        improvement_pct(self.initial_rmse, self.rmse)
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let method = match self.method {
            Method::Baseline => "baseline",
            Method::Refined => "refined",
        };
        write!(
            f,
            "method {method}  initial RMSE {:.6}  RMSE {:.6}  improvement {:.2}%",
            self.initial_rmse,
            self.rmse,
            self.improvement_pct()
        )
    }
}

/// Scores a reconstruction file against the ground truth of a dataset.
pub fn evaluate(recon_path: &Path, dataset_path: &Path) -> Result<Evaluation, HarnessError> {
    let recon = ReconstructionFile::read(recon_path)?;
    let dataset = DatasetFile::read(dataset_path)?;
    let gt = dataset.gt_points.ok_or_else(|| HarnessError::GroundTruthUnavailable(dataset_path.to_path_buf()))?;
    let mismatch = |e: super::metrics::MetricError| HarnessError::parse(recon_path, e);
    Ok(Evaluation {
        method: recon.method,
        initial_rmse: rmse(&recon.initial_points, &gt).map_err(mismatch)?,
        rmse: rmse(&recon.points, &gt).map_err(mismatch)?,
    })
}

/// Runs the benchmark and, with `csv`, writes the CSV report.
pub fn benchmark(opts: &BenchmarkOptions, csv: Option<&Path>, force: bool) -> Result<BenchmarkReport, HarnessError> {
    if let Some(path) = csv {
        check_clobber(path, force)?;
    }
    let report = run_benchmark(opts)?;
    if let Some(path) = csv {
        write_text(path, &report.to_csv(), force)?;
    }
    Ok(report)
}

pub fn export(recon_path: &Path, format: ExportFormat, view: View, out: &Path, force: bool) -> Result<(), HarnessError> {
    check_clobber(out, force)?;
    let recon = ReconstructionFile::read(recon_path)?;
    let gt = recon.gt_points.as_deref();
    let text = match format {
        ExportFormat::PointCloud => to_ply(&recon.points, gt),
        ExportFormat::ScatterSvg => to_svg(&recon.points, gt, view),
        ExportFormat::Csv => to_csv(&recon.points, gt),
    };
    write_text(out, &text, force)
}
