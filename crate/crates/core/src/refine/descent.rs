use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{init_field, make_grid, step_parameter, CostModel, DisplacementField, Objective, RefineConfig, RefineError};
use crate::par::{map_indexed, Execution};
use crate::sft::Reconstruction;

/// Per-iteration record of a descent.
///
/// `costs[k]` is the cost of the k-th iterate. Gradient norms and step
/// sizes are recorded for every step actually taken, so they are one
/// shorter than `costs`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub costs: Vec<f64>,
    pub best_iteration: usize,
    /// `D_max` of each step.
    pub gradient_norms: Vec<f64>,
    /// Largest control-target move of each step.
    pub max_steps: Vec<f64>,
    pub skipped: Vec<usize>,
    pub fallbacks: Vec<usize>,
    /// Step parameter `h`.
    pub step_parameter: f64,
}

impl RefineTrace {
    pub fn iterations(&self) -> usize {
        self.costs.len()
    }

    pub fn best_cost(&self) -> f64 {
        self.costs[self.best_iteration]
    }
}

/// Central-difference derivative of the objective with respect to every
/// control-target coordinate. The `2·2K` evaluations are independent;
/// they are computed with `exec` and combined in index order.
pub fn numeric_gradient<O: Objective>(
    objective: &O,
    targets: &[Vector2<f64>],
    fd_step: f64,
    exec: Execution,
) -> Result<Vec<Vector2<f64>>, RefineError> {
    let prepared = objective.prepare(targets)?;
    let k = targets.len();
    let values = map_indexed(4 * k, exec, |job| {
        let (index, axis, sign) = (job / 4, (job / 2) % 2, if job % 2 == 0 { 1.0 } else { -1.0 });
        objective.perturbed(&prepared, index, axis, sign * fd_step)
    });
    let values = values.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(values
        .chunks_exact(4)
        .map(|v| Vector2::new((v[0] - v[1]) / (2.0 * fd_step), (v[2] - v[3]) / (2.0 * fd_step)))
        .collect())
}

/// Normalized gradient descent from `initial`, returning the iterate of
/// minimum cost.
///
/// Each step subtracts `min(1, h / (2 D_max)) · D`, so no target moves
/// more than `h / 2`. Runs at least `min_iters` iterations and stops after
/// `patience` iterations without a new minimum, or at `max_iters`.
pub fn descend_objective<O: Objective>(
    objective: &O,
    initial: Vec<Vector2<f64>>,
    h: f64,
    cfg: &RefineConfig,
) -> Result<(Vec<Vector2<f64>>, RefineTrace), RefineError> {
    cfg.validate()?;
    let mut trace = RefineTrace { step_parameter: h, ..Default::default() };
    let mut current = initial;
    let mut best = current.clone();
    let mut best_cost = f64::INFINITY;
    let mut stale = 0usize;
    for iteration in 0..cfg.max_iters {
        let eval = objective.evaluate(&current)?;
        if !eval.value.is_finite() {
            return Err(RefineError::NonFiniteCost { iteration, trace: Box::new(trace) });
        }
        trace.costs.push(eval.value);
        trace.skipped.push(eval.skipped);
        trace.fallbacks.push(eval.fallbacks);
        if eval.value < best_cost {
            best_cost = eval.value;
            best.clone_from(&current);
            trace.best_iteration = iteration;
            stale = 0;
        } else {
            stale += 1;
        }
        let done = iteration + 1 >= cfg.max_iters || (iteration + 1 >= cfg.min_iters && stale >= cfg.patience);
        if done {
            break;
        }

        let grad = numeric_gradient(objective, &current, cfg.fd_step, cfg.execution)?;
        let d_max = grad.iter().map(|g| g.norm()).fold(0.0f64, f64::max);
        if !d_max.is_finite() {
            return Err(RefineError::NonFiniteCost { iteration, trace: Box::new(trace) });
        }
        let factor = if d_max > 0.0 { (h / (2.0 * d_max)).min(1.0) } else { 0.0 };
        let mut max_step = 0.0f64;
        for (t, g) in current.iter_mut().zip(&grad) {
            let step = g * factor;
            max_step = max_step.max(step.norm());
            *t -= step;
        }
        trace.gradient_norms.push(d_max);
        trace.max_steps.push(max_step);
    }
    Ok((best, trace))
}

/// Optimizes the displacement field for an initial reconstruction.
pub fn descend(recon: &Reconstruction, cfg: &RefineConfig) -> Result<(DisplacementField, RefineTrace), RefineError> {
    let grid = make_grid(recon.sources().len(), cfg.grid_factor);
    let model = CostModel::new(recon, cfg, &grid)?;
    let h = step_parameter(grid.len());
    let initial = init_field(&grid, h, cfg.seed)?;
    let (targets, trace) = descend_objective(&model, initial.grid_targets().to_vec(), h, cfg)?;
    Ok((DisplacementField::new(grid, targets)?, trace))
}

/// Result of [`refine`].
#[derive(Debug, Clone)]
pub struct Refinement {
    pub field: DisplacementField,
    pub trace: RefineTrace,
    pub reconstruction: Reconstruction,
}

/// [`descend`] followed by rebuilding the reconstruction with the best field.
pub fn refine(recon: &Reconstruction, cfg: &RefineConfig) -> Result<Refinement, RefineError> {
    let (field, trace) = descend(recon, cfg)?;
    let reconstruction = recon.with_displacement(&field)?;
    Ok(Refinement { field, trace, reconstruction })
}
