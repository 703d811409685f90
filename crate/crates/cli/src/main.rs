use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tearsft::geometry::Camera;
use tearsft::harness::benchmark::{parse_seeds, BenchmarkOptions, CombinedMode};
use tearsft::harness::commands::{self, GenerateArgs, ReconstructArgs};
use tearsft::harness::config::Settings;
use tearsft::harness::export::{ExportFormat, View};
use tearsft::harness::HarnessError;
use tearsft::par::Execution;
use tearsft::synthgen::{AngleUnit, EtcKind};
use tearsft::warps::KernelKind;

/// Template-based 3D reconstruction of torn and disconnected surfaces.
#[derive(Parser)]
#[command(name = "tearsft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with one topological change.
    Generate(GenerateCmd),
    /// Reconstruct 3D points from a dataset file.
    Reconstruct(ReconstructCmd),
    /// Compare a reconstruction against dataset ground truth.
    Evaluate(EvaluateCmd),
    /// Baseline vs refined RMSE over all four kinds.
    Benchmark(BenchmarkCmd),
    /// Export a reconstruction for external viewers.
    Export(ExportCmd),
}

#[derive(Args)]
struct AngleFlags {
    /// Read the surface angles as radians (default).
    #[arg(long, conflicts_with = "degrees")]
    radians: bool,
    /// Read the surface angles as degrees.
    #[arg(long)]
    degrees: bool,
}

impl AngleFlags {
    fn unit(&self) -> Option<AngleUnit> {
        match (self.radians, self.degrees) {
            (_, true) => Some(AngleUnit::Degrees),
            (true, _) => Some(AngleUnit::Radians),
            _ => None,
        }
    }
}

#[derive(Args)]
struct RefineFlags {
    /// Kernel of the image and template warps.
    #[arg(long)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    grid_factor: Option<f64>,
    /// Side of the square loss grid.
    #[arg(long)]
    loss_grid: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Seed of the random initial displacement field.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate gradients on one thread.
    #[arg(long)]
    sequential: bool,
    /// JSON file with any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RefineFlags {
    fn settings(&self) -> Result<Settings, HarnessError> {
        let file = match &self.config {
            Some(path) => Settings::read(path)?,
            None => Settings::default(),
        };
        Ok(file.overlay(Settings {
            kernel: self.kernel,
            lambda: self.lambda,
            epsilon: self.epsilon,
            grid_factor: self.grid_factor,
            loss_grid: self.loss_grid,
            max_iters: self.max_iters,
            min_iters: None,
            seed: self.seed,
            angle_unit: None,
            execution: self.sequential.then_some(Execution::Sequential),
        }))
    }
}

#[derive(Args)]
struct GenerateCmd {
    /// exterior, interior, simple or hole.
    #[arg(long)]
    kind: EtcKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = 100)]
    n_points: usize,
    /// Use identity rigid transforms.
    #[arg(long)]
    identity: bool,
    #[arg(long, default_value_t = 0.01)]
    exclusion_band: f64,
    /// Pixel intrinsics `fx,fy,cx,cy`; image targets are then written in pixels.
    #[arg(long, value_parser = parse_camera)]
    camera: Option<Camera>,
    #[command(flatten)]
    angles: AngleFlags,
}

#[derive(Args)]
struct ReconstructCmd {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cost trace output, default `<out>.trace.json`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    force: bool,
    /// Stop after the initial closed-form reconstruction.
    #[arg(long)]
    skip_refine: bool,
    #[command(flatten)]
    refine: RefineFlags,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    recon: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct BenchmarkCmd {
    /// `42`, `1..5` or `1,4,9`.
    #[arg(long, default_value = "42")]
    seeds: String,
    #[arg(long)]
    identity: bool,
    #[arg(long, default_value = "pooled")]
    combined: CombinedMode,
    #[arg(long, default_value_t = 100)]
    n_points: usize,
    /// Write the CSV report here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    angles: AngleFlags,
    #[command(flatten)]
    refine: RefineFlags,
}

#[derive(Args)]
struct ExportCmd {
    #[arg(long)]
    recon: PathBuf,
    /// pointcloud, scatter-svg or csv.
    #[arg(long)]
    format: ExportFormat,
    #[arg(long)]
    out: PathBuf,
    /// Plane of the SVG scatter: xy, xz or yz.
    #[arg(long, default_value = "xz")]
    view: View,
    #[arg(long)]
    force: bool,
}

fn parse_camera(s: &str) -> Result<Camera, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let [fx, fy, cx, cy] = v[..] else {
        return Err("expected fx,fy,cx,cy".into());
    };
    Camera::new(fx, fy, cx, cy).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate(c) => {
            let args = GenerateArgs {
                force: c.force,
                n_points: c.n_points,
                identity_transforms: c.identity,
                angle_unit: c.angles.unit().unwrap_or_default(),
                exclusion_band: c.exclusion_band,
                camera: c.camera.unwrap_or_else(Camera::identity),
                ..GenerateArgs::new(c.kind, c.seed, c.out.clone())
            };
            let file = commands::generate(&args)?;
            println!("wrote {} points ({} seed {}) to {}", file.sources.len(), c.kind, c.seed, c.out.display());
        }
        Command::Reconstruct(c) => {
            let args = ReconstructArgs {
                input: c.input,
                out: c.out.clone(),
                trace: c.trace,
                force: c.force,
                skip_refine: c.skip_refine,
                settings: c.refine.settings()?,
            };
            let file = commands::reconstruct(&args)?;
            let s = &file.summary;
            print!("wrote {} points to {}", s.n_points, c.out.display());
            if s.iterations > 0 {
                print!(" after {} iterations (best {})", s.iterations, s.best_iteration);
            }
            println!();
            if let (Some(a), Some(b)) = (s.initial_rmse, s.rmse) {
                println!("initial RMSE {a:.6}  RMSE {b:.6}");
            }
        }
        Command::Evaluate(c) => println!("{}", commands::evaluate(&c.recon, &c.dataset)?),
        Command::Benchmark(c) => {
            let settings = c.refine.settings()?;
            let opts = BenchmarkOptions {
                seeds: parse_seeds(&c.seeds).map_err(HarnessError::Usage)?,
                identity_transforms: c.identity,
                n_points: c.n_points,
                angle_unit: c.angles.unit().or(settings.angle_unit).unwrap_or_default(),
                kernels: settings.kernels(),
                refine: settings.refine_config()?,
                ..BenchmarkOptions::default()
            };
            let report = commands::benchmark(&opts, c.csv.as_deref(), c.force)?;
            print!("{}", report.to_table(c.combined));
        }
        Command::Export(c) => {
            commands::export(&c.recon, c.format, c.view, &c.out, c.force)?;
            println!("wrote {}", c.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::Numeric { indices, .. } = &e {
                if !indices.is_empty() {
                    eprintln!("failing source indices: {indices:?}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
