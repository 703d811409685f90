//! Displacement-field refinement of an initial reconstruction.
//!
//! A TPS field `d` on a regular control grid re-indexes the initial depth,
//! `φ_d(p) = η̃(p) γ₀(p + d(p))`. The field targets are optimized by
//! normalized finite-difference gradient descent on the averaged cost
//! `λ L_{Φ_d} + (1 − λ) |d| / (L_{Φ₀} + ε)` over a loss grid.

mod cost;
mod descent;
mod field;

pub use cost::{CostEval, CostModel, Objective, QuadraticShim};
pub use descent::{descend, descend_objective, numeric_gradient, refine, Refinement, RefineTrace};
pub use field::{init_field, DisplacementField};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::par::Execution;
use crate::sft::SftError;
use crate::warps::WarpError;

#[derive(Debug, Error, Clone)]
pub enum RefineError {
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("invalid refinement config: {0}")]
    InvalidConfig(String),
    #[error("every loss point failed to evaluate")]
    AllPointsSkipped,
    #[error("cost became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize, trace: Box<RefineTrace> },
}

/// Tunables of the refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Weight of the isometry term, in (0, 1).
    pub lambda: f64,
    /// Regularizer of the displacement weight denominator.
    pub epsilon: f64,
    /// Control grid factor `C` in `K = ⌈C √M⌉²`, in [1, 2].
    pub grid_factor: f64,
    /// Loss grid is `loss_grid_side²` cell centers over `[-1, 1]²`.
    pub loss_grid_side: usize,
    /// Central-difference step.
    pub fd_step: f64,
    pub min_iters: usize,
    pub max_iters: usize,
    /// Stop after this many consecutive iterations without a new minimum.
    pub patience: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            epsilon: 1e-3,
            grid_factor: 1.5,
            loss_grid_side: 33,
            fd_step: 1e-4,
            min_iters: 10,
            max_iters: 40,
            patience: 5,
            seed: 42,
            execution: Execution::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        let bad = |msg: String| Err(RefineError::InvalidConfig(msg));
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must be in (0, 1), got {}", self.lambda));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(1.0..=2.0).contains(&self.grid_factor) {
            return bad(format!("grid factor must be in [1, 2], got {}", self.grid_factor));
        }
        if self.loss_grid_side < 2 {
            return bad(format!("loss grid side must be at least 2, got {}", self.loss_grid_side));
        }
        if !(self.fd_step > 0.0) {
            return bad(format!("finite-difference step must be positive, got {}", self.fd_step));
        }
        if self.min_iters == 0 || self.min_iters > self.max_iters {
            return bad(format!("need 1 <= min_iters <= max_iters, got {} and {}", self.min_iters, self.max_iters));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

/// Side length `⌈C √M⌉` of the control grid.
pub fn grid_side(m: usize, grid_factor: f64) -> usize {
    (grid_factor * (m as f64).sqrt()).ceil() as usize
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if n > 1 && i == n - 1 { hi } else { lo + step * i as f64 })
}

/// Evenly spaced `√K × √K` control grid over `[-0.95, 0.95]²`, row-major
/// (x varies fastest).
pub fn make_grid(m: usize, grid_factor: f64) -> Vec<Point2> {
    let side = grid_side(m, grid_factor);
    let xs: Vec<f64> = linspace(-0.95, 0.95, side).collect();
    xs.iter().flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y))).collect()
}

/// `side × side` cell centers over `[-1, 1]²`, row-major.
pub fn loss_grid(side: usize) -> Vec<Point2> {
    let xs: Vec<f64> = (0..side).map(|i| -1.0 + (2 * i + 1) as f64 / side as f64).collect();
    xs.iter().flat_map(|&y| xs.iter().map(move |&x| Point2::new(x, y))).collect()
}

/// Step parameter `h = 1.9 / (3 √K)`.
pub fn step_parameter(k: usize) -> f64 {
    1.9 / (3.0 * (k as f64).sqrt())
}
