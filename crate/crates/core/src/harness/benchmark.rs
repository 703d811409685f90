//! Baseline-versus-refined RMSE over the four ETC kinds and a seed list.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::commands::{run_pipeline, PipelineOutput};
use super::metrics::{improvement_pct, mean_std, rmse, squared_error_sum};
use super::HarnessError;
use crate::geometry::Camera;
use crate::par::{map_indexed, Execution};
use crate::refine::{DisplacementField, RefineConfig, RefineTrace};
use crate::sft::KernelConfig;
use crate::synthgen::{gen_etc, AngleUnit, EtcDataset, EtcKind, EtcSpec};

/// How the "Combined" row aggregates datasets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinedMode {
    /// RMSE over the union of all points.
    #[default]
    Pooled,
    /// Mean of per-dataset RMSEs.
    Mean,
}

impl std::str::FromStr for CombinedMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "mean" => Ok(Self::Mean),
            _ => Err(format!("unknown combined mode `{s}` (expected pooled or mean)")),
        }
    }
}

/// Parses `42`, `1..5` (inclusive) or `1,4,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = |_| format!("invalid seed list `{s}`");
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(bad)?;
        let hi: u64 = hi.trim().trim_start_matches('=').parse().map_err(bad)?;
        if hi < lo {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds = s.split(',').map(|x| x.trim().parse::<u64>().map_err(bad)).collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err(format!("empty seed list `{s}`"));
    }
    Ok(seeds)
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub kinds: Vec<EtcKind>,
    pub seeds: Vec<u64>,
    /// Use identity rigid transforms instead of seeded ones.
    pub identity_transforms: bool,
    pub n_points: usize,
    pub angle_unit: AngleUnit,
    pub camera: Camera,
    pub kernels: KernelConfig,
    pub refine: RefineConfig,
    /// How datasets are scheduled. The report does not depend on it.
    pub execution: Execution,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            kinds: EtcKind::ALL.to_vec(),
            seeds: vec![42],
            identity_transforms: false,
            n_points: 100,
            angle_unit: AngleUnit::Radians,
            camera: Camera::identity(),
            kernels: KernelConfig::default(),
            refine: RefineConfig::default(),
            execution: Execution::Parallel,
        }
    }
}

impl BenchmarkOptions {
    pub fn spec(&self, kind: EtcKind, seed: u64) -> EtcSpec {
        let base = if self.identity_transforms { EtcSpec::identity(kind, seed) } else { EtcSpec::new(kind, seed) };
        EtcSpec { n_points: self.n_points, angle_unit: self.angle_unit, ..base }
    }
}

/// One dataset, reconstructed with and without refinement.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub kind: EtcKind,
    pub seed: u64,
    pub n_points: usize,
    pub initial_rmse: f64,
    pub refined_rmse: f64,
    pub initial_sq_sum: f64,
    pub refined_sq_sum: f64,
    pub wall_time: Duration,
    pub dataset: EtcDataset,
    pub field: DisplacementField,
    pub trace: RefineTrace,
}

impl RunResult {
    pub fn improvement_pct(&self) -> f64 {
        improvement_pct(self.initial_rmse, self.refined_rmse)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindRow {
    pub kind: EtcKind,
    pub runs: usize,
    pub initial_mean: f64,
    pub initial_std: f64,
    pub refined_mean: f64,
    pub refined_std: f64,
    /// Improvement of the mean refined RMSE over the mean baseline.
    pub improvement_pct: f64,
    /// Mean of the per-run relative improvements.
    pub mean_relative_improvement_pct: f64,
    pub mean_iterations: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedRow {
    pub runs: usize,
    pub initial: f64,
    pub refined: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub runs: Vec<RunResult>,
    pub rows: Vec<KindRow>,
    pub pooled: CombinedRow,
    pub mean: CombinedRow,
}

pub fn run_dataset(opts: &BenchmarkOptions, kind: EtcKind, seed: u64) -> Result<RunResult, HarnessError> {
    let start = Instant::now();
    let context = |e: HarnessError| match e {
        HarnessError::Numeric { msg, indices } => HarnessError::Numeric { msg: format!("{kind} seed {seed}: {msg}"), indices },
        e => e,
    };
    let dataset = gen_etc(&opts.spec(kind, seed), &opts.camera)?;
    let PipelineOutput { initial, refinement, .. } =
        run_pipeline(&dataset.correspondences(), opts.kernels, Some(&opts.refine)).map_err(context)?;
    let refinement = refinement.expect("refinement requested");
    let gt = &dataset.gt_points;
    let metric = |e| HarnessError::Numeric { msg: format!("{kind} seed {seed}: {e}"), indices: Vec::new() };
    let refined = refinement.reconstruction.points();
    Ok(RunResult {
        kind,
        seed,
        n_points: gt.len(),
        initial_rmse: rmse(initial.points(), gt).map_err(metric)?,
        refined_rmse: rmse(refined, gt).map_err(metric)?,
        initial_sq_sum: squared_error_sum(initial.points(), gt).map_err(metric)?,
        refined_sq_sum: squared_error_sum(refined, gt).map_err(metric)?,
        wall_time: start.elapsed(),
        field: refinement.field,
        trace: refinement.trace,
        dataset,
    })
}

pub fn run_benchmark(opts: &BenchmarkOptions) -> Result<BenchmarkReport, HarnessError> {
    if opts.kinds.is_empty() || opts.seeds.is_empty() {
        return Err(HarnessError::Usage("benchmark needs at least one kind and one seed".into()));
    }
    let jobs: Vec<(EtcKind, u64)> =
        opts.kinds.iter().flat_map(|&k| opts.seeds.iter().map(move |&s| (k, s))).collect();
    let runs = map_indexed(jobs.len(), opts.execution, |i| run_dataset(opts, jobs[i].0, jobs[i].1))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchmarkReport::from_runs(&opts.kinds, runs))
}

impl BenchmarkReport {
    pub fn from_runs(kinds: &[EtcKind], runs: Vec<RunResult>) -> Self {
        let rows = kinds
            .iter()
            .map(|&kind| {
                let mine: Vec<&RunResult> = runs.iter().filter(|r| r.kind == kind).collect();
                let collect = |f: fn(&RunResult) -> f64| mine.iter().map(|r| f(r)).collect::<Vec<_>>();
                let (initial_mean, initial_std) = mean_std(&collect(|r| r.initial_rmse));
                let (refined_mean, refined_std) = mean_std(&collect(|r| r.refined_rmse));
                KindRow {
                    kind,
                    runs: mine.len(),
                    initial_mean,
                    initial_std,
                    refined_mean,
                    refined_std,
                    improvement_pct: improvement_pct(initial_mean, refined_mean),
                    mean_relative_improvement_pct: mean_std(&collect(RunResult::improvement_pct)).0,
                    mean_iterations: mean_std(&collect(|r| r.trace.iterations() as f64)).0,
                    wall_time: mine.iter().map(|r| r.wall_time).sum(),
                }
            })
            .collect();
        let n: usize = runs.iter().map(|r| r.n_points).sum();
        let pooled = CombinedRow {
            runs: runs.len(),
            initial: (runs.iter().map(|r| r.initial_sq_sum).sum::<f64>() / n as f64).sqrt(),
            refined: (runs.iter().map(|r| r.refined_sq_sum).sum::<f64>() / n as f64).sqrt(),
        };
        let mean = CombinedRow {
            runs: runs.len(),
            initial: mean_std(&runs.iter().map(|r| r.initial_rmse).collect::<Vec<_>>()).0,
            refined: mean_std(&runs.iter().map(|r| r.refined_rmse).collect::<Vec<_>>()).0,
        };
        Self { runs, rows, pooled, mean }
    }

    pub fn row(&self, kind: EtcKind) -> Option<&KindRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    /// Machine-readable report. Wall times are left out so the output is
    /// reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "row,kind,seed,runs,initial_rmse,initial_std,refined_rmse,refined_std,improvement_pct,iterations\n",
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "run,{},{},1,{},,{},,{},{}",
                r.kind,
                r.seed,
                r.initial_rmse,
                r.refined_rmse,
                r.improvement_pct(),
                r.trace.iterations()
            );
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "kind,{},,{},{},{},{},{},{},{}",
                r.kind,
                r.runs,
                r.initial_mean,
                r.initial_std,
                r.refined_mean,
                r.refined_std,
                r.improvement_pct,
                r.mean_iterations
            );
        }
        for (name, c) in [("combined_pooled", &self.pooled), ("combined_mean", &self.mean)] {
            let _ = writeln!(
                out,
                "{name},,,{},{},,{},,{},",
                c.runs,
                c.initial,
                c.refined,
                improvement_pct(c.initial, c.refined)
            );
        }
        out
    }

    /// Human-readable table; `combined` picks which aggregate is listed
    /// first.
    pub fn to_table(&self, combined: CombinedMode) -> String {
        let replicated = self.rows.iter().any(|r| r.runs > 1);
        let cell = |m: f64, s: f64| if replicated { format!("{m:.4} ± {s:.4}") } else { format!("{m:.4}") };
        let w = if replicated { 17 } else { 8 };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>w$} {:>w$} {:>9} {:>7} {:>9}",
            "dataset", "initial", "refined", "improv.%", "iters", "time (s)"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<22} {:>w$} {:>w$} {:>9.2} {:>7.1} {:>9.1}",
                r.kind.name(),
                cell(r.initial_mean, r.initial_std),
                cell(r.refined_mean, r.refined_std),
                r.improvement_pct,
                r.mean_iterations,
                r.wall_time.as_secs_f64()
            );
        }
        let order = match combined {
            CombinedMode::Pooled => [("Combined", &self.pooled), ("Combined (mean)", &self.mean)],
            CombinedMode::Mean => [("Combined", &self.mean), ("Combined (pooled)", &self.pooled)],
        };
        for (name, c) in order {
            let _ = writeln!(
                out,
                "{:<22} {:>w$.4} {:>w$.4} {:>9.2}",
                name,
                c.initial,
                c.refined,
                improvement_pct(c.initial, c.refined)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("42").unwrap(), vec![42]);
        assert_eq!(parse_seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("3, 9,11").unwrap(), vec![3, 9, 11]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("a").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn combined_modes_parse() {
        assert_eq!("mean".parse::<CombinedMode>().unwrap(), CombinedMode::Mean);
        assert!("median".parse::<CombinedMode>().is_err());
    }
}
