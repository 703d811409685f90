//! `--config` files. Keys mirror the command-line flags; flags given on
//! the command line take precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::read_json;
use super::HarnessError;
use crate::par::Execution;
use crate::refine::RefineConfig;
use crate::sft::KernelConfig;
use crate::synthgen::AngleUnit;
use crate::warps::KernelKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Kernel of η and Δ.
    pub kernel: Option<KernelKind>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub grid_factor: Option<f64>,
    pub loss_grid: Option<usize>,
    pub max_iters: Option<usize>,
    pub min_iters: Option<usize>,
    pub seed: Option<u64>,
    pub angle_unit: Option<AngleUnit>,
    pub execution: Option<Execution>,
}

impl Settings {
    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        read_json(path)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            kernel: over.kernel.or(self.kernel),
            lambda: over.lambda.or(self.lambda),
            epsilon: over.epsilon.or(self.epsilon),
            grid_factor: over.grid_factor.or(self.grid_factor),
            loss_grid: over.loss_grid.or(self.loss_grid),
            max_iters: over.max_iters.or(self.max_iters),
            min_iters: over.min_iters.or(self.min_iters),
            seed: over.seed.or(self.seed),
            angle_unit: over.angle_unit.or(self.angle_unit),
            execution: over.execution.or(self.execution),
        }
    }

    /// Refinement settings. A `max_iters` below the default minimum also
    /// lowers the minimum.
    pub fn refine_config(&self) -> Result<RefineConfig, HarnessError> {
        let d = RefineConfig::default();
        let max_iters = self.max_iters.unwrap_or(d.max_iters);
        let cfg = RefineConfig {
            lambda: self.lambda.unwrap_or(d.lambda),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            grid_factor: self.grid_factor.unwrap_or(d.grid_factor),
            loss_grid_side: self.loss_grid.unwrap_or(d.loss_grid_side),
            min_iters: self.min_iters.unwrap_or(d.min_iters.min(max_iters)),
            max_iters,
            seed: self.seed.unwrap_or(d.seed),
            execution: self.execution.unwrap_or(d.execution),
            ..d
        };
        cfg.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn kernels(&self) -> KernelConfig {
        let k = self.kernel.unwrap_or(KernelKind::Tps);
        KernelConfig { eta: k, delta: k, ..KernelConfig::default() }
    }
}
