use nalgebra::{DMatrix, Vector2};

use super::{loss_grid, RefineConfig, RefineError};
use crate::geometry::{Mat2, Mat3x2, Point2, Point3};
use crate::sft::{isometry_error_from_metric, metric_from_jacobians, template_gram_inverse, Reconstruction};
use crate::warps::{CenterPolicy, KernelKind, RbfSystem};

/// One cost evaluation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEval {
    pub value: f64,
    /// Loss points excluded because a metric was singular.
    pub skipped: usize,
    /// Sources whose displaced depth used the interpolated fallback.
    pub fallbacks: usize,
}

/// A scalar function of the control-grid targets.
pub trait Objective: Sync {
    /// State shared by every perturbation around one set of targets.
    type Prepared: Sync;

    fn dimension(&self) -> usize;

    fn evaluate(&self, targets: &[Vector2<f64>]) -> Result<CostEval, RefineError>;

    fn prepare(&self, targets: &[Vector2<f64>]) -> Result<Self::Prepared, RefineError>;

    /// Value with target `index`, coordinate `axis` shifted by `delta`.
    fn perturbed(&self, prepared: &Self::Prepared, index: usize, axis: usize, delta: f64) -> Result<f64, RefineError>;
}

/// `scale · Σ |r'_i|²`, used to check the descent machinery.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticShim {
    pub dimension: usize,
    pub scale: f64,
}

impl Objective for QuadraticShim {
    type Prepared = Vec<Vector2<f64>>;

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, targets: &[Vector2<f64>]) -> Result<CostEval, RefineError> {
        let value = self.scale * targets.iter().map(|t| t.norm_squared()).sum::<f64>();
        Ok(CostEval { value, skipped: 0, fallbacks: 0 })
    }

    fn prepare(&self, targets: &[Vector2<f64>]) -> Result<Self::Prepared, RefineError> {
        Ok(targets.to_vec())
    }

    fn perturbed(&self, prepared: &Self::Prepared, index: usize, axis: usize, delta: f64) -> Result<f64, RefineError> {
        let mut t = prepared.clone();
        t[index][axis] += delta;
        Ok(self.evaluate(&t)?.value)
    }
}

/// Loss point with everything that does not depend on the field.
#[derive(Debug, Clone)]
struct LossPoint {
    /// Row into the displacement weights.
    row: usize,
    gram_inv: Mat2,
    /// `1 / (L_{Φ₀}(q) + ε)`.
    weight: f64,
}

/// The discretized refinement cost for one initial reconstruction.
///
/// `φ_d` and `d` are both linear in their interpolation targets, so the
/// Jacobian of `φ_d` at a loss point and `d` at any fixed point are dot
/// products with precomputed cardinal weights.
#[derive(Debug, Clone)]
pub struct CostModel<'a> {
    recon: &'a Reconstruction,
    lambda: f64,
    epsilon: f64,
    grid: Vec<Point2>,
    loss_points: Vec<Point2>,
    active: Vec<LossPoint>,
    /// `M × 2A` gradients of the φ cardinal functions at the active loss
    /// points; columns `2a`, `2a + 1` are the x and y derivatives.
    phi_grads: DMatrix<f64>,
    /// `K × M`, column `k` is `d(p_i)` per unit target `k`.
    d_sources: Vec<f64>,
    /// `K × N`.
    d_loss: Vec<f64>,
    initial_errors: Vec<Option<f64>>,
    initial_skipped: usize,
}

/// Prepared displacements for central differences.
#[derive(Debug, Clone)]
pub struct PreparedField {
    at_sources: Vec<Vector2<f64>>,
    at_loss: Vec<Vector2<f64>>,
}

impl<'a> CostModel<'a> {
    /// `recon` must be the undisplaced initial reconstruction.
    pub fn new(recon: &'a Reconstruction, cfg: &RefineConfig, grid: &[Point2]) -> Result<Self, RefineError> {
        cfg.validate()?;
        let loss_points = loss_grid(cfg.loss_grid_side);
        let d_system = RbfSystem::new(grid, KernelKind::Tps)?;
        let k = grid.len();
        let transpose = |rows: Vec<Vec<f64>>| {
            let n = rows.len();
            let mut out = vec![0.0; k * n];
            for (i, row) in rows.iter().enumerate() {
                for (j, w) in row.iter().enumerate() {
                    out[j * n + i] = *w;
                }
            }
            out
        };
        let d_sources = transpose(recon.sources().iter().map(|p| d_system.cardinal_values(p)).collect());
        let d_loss = transpose(loss_points.iter().map(|q| d_system.cardinal_values(q)).collect());

        let phi_system = recon.phi_system();
        let mut candidates = Vec::with_capacity(loss_points.len());
        let mut grads = Vec::with_capacity(loss_points.len());
        for (row, q) in loss_points.iter().enumerate() {
            let gram_inv = recon
                .delta()
                .jacobian3(q, CenterPolicy::Strict)
                .map_err(Into::into)
                .and_then(|j| template_gram_inverse(&j));
            let phi_grads = phi_system.cardinal_gradients(q, CenterPolicy::Strict);
            if let (Ok(gram_inv), Ok(phi_grads)) = (gram_inv, phi_grads) {
                candidates.push(LossPoint { row, gram_inv, weight: 0.0 });
                grads.push(phi_grads);
            }
        }
        let mut model = Self {
            recon,
            lambda: cfg.lambda,
            epsilon: cfg.epsilon,
            grid: grid.to_vec(),
            loss_points,
            active: candidates,
            phi_grads: gradient_matrix(recon.sources().len(), &grads),
            d_sources,
            d_loss,
            initial_errors: Vec::new(),
            initial_skipped: 0,
        };
        let errors = model.isometry_errors(recon.points());
        let mut initial = vec![None; model.loss_points.len()];
        for (lp, e) in model.active.iter().zip(&errors) {
            initial[lp.row] = *e;
        }
        let eps = model.epsilon;
        let mut kept = Vec::with_capacity(model.active.len());
        let mut kept_grads = Vec::with_capacity(model.active.len());
        for ((mut lp, e), g) in model.active.drain(..).zip(errors).zip(grads) {
            if let Some(e) = e {
                lp.weight = 1.0 / (e + eps);
                kept.push(lp);
                kept_grads.push(g);
            }
        }
        model.initial_skipped = model.loss_points.len() - kept.len();
        model.active = kept;
        model.phi_grads = gradient_matrix(recon.sources().len(), &kept_grads);
        model.initial_errors = initial;
        if model.active.is_empty() {
            return Err(RefineError::AllPointsSkipped);
        }
        Ok(model)
    }

    pub fn grid(&self) -> &[Point2] {
        &self.grid
    }

    pub fn loss_points(&self) -> &[Point2] {
        &self.loss_points
    }

    /// `L_{Φ₀}` per loss point; `None` where it could not be evaluated.
    pub fn initial_errors(&self) -> &[Option<f64>] {
        &self.initial_errors
    }

    pub fn initial_skipped(&self) -> usize {
        self.initial_skipped
    }

    /// Isometry error at each active loss point for a surface with the
    /// given values at the sources.
    fn isometry_errors(&self, points: &[Point3]) -> Vec<Option<f64>> {
        let m = points.len();
        let coords: [Vec<f64>; 3] = std::array::from_fn(|r| points.iter().map(|p| p[r]).collect());
        let grads = self.phi_grads.as_slice();
        self.active
            .iter()
            .enumerate()
            .map(|(a, lp)| {
                let gx = &grads[2 * a * m..(2 * a + 1) * m];
                let gy = &grads[(2 * a + 1) * m..(2 * a + 2) * m];
                let mut j = [0.0; 6];
                for r in 0..3 {
                    j[2 * r] = dot(&coords[r], gx);
                    j[2 * r + 1] = dot(&coords[r], gy);
                }
                let (e, e_inv) = metric_from_jacobians(&lp.gram_inv, &Mat3x2::from_row_slice(&j)).ok()?;
                let l = isometry_error_from_metric(&e, &e_inv);
                l.is_finite().then_some(l)
            })
            .collect()
    }

    fn displacements(&self, weights: &[f64], n: usize, targets: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
        let mut out = vec![Vector2::zeros(); n];
        for (k, t) in targets.iter().enumerate() {
            let col = &weights[k * n..(k + 1) * n];
            for (o, w) in out.iter_mut().zip(col) {
                *o += t * *w;
            }
        }
        out
    }

    pub fn prepare_field(&self, targets: &[Vector2<f64>]) -> PreparedField {
        PreparedField {
            at_sources: self.displacements(&self.d_sources, self.recon.sources().len(), targets),
            at_loss: self.displacements(&self.d_loss, self.loss_points.len(), targets),
        }
    }

    /// Cost from displacements already evaluated at the sources and at
    /// every loss point.
    pub fn cost_from_displacements(
        &self,
        at_sources: &[Vector2<f64>],
        at_loss: &[Vector2<f64>],
    ) -> Result<CostEval, RefineError> {
        let recon = self.recon;
        let mut fallbacks = 0;
        let mut points = Vec::with_capacity(at_sources.len());
        for ((p, lifted), d) in recon.sources().iter().zip(recon.lifted_sources()).zip(at_sources) {
            let depth = recon.gamma0_at(&(p + d))?;
            fallbacks += depth.fallback as usize;
            points.push(Point3::from(lifted * depth.value));
        }
        let mut sum = 0.0;
        let mut used = 0usize;
        for (lp, l) in self.active.iter().zip(self.isometry_errors(&points)) {
            if let Some(l) = l {
                sum += self.lambda * l + (1.0 - self.lambda) * at_loss[lp.row].norm() * lp.weight;
                used += 1;
            }
        }
        if used == 0 {
            return Err(RefineError::AllPointsSkipped);
        }
        Ok(CostEval { value: sum / used as f64, skipped: self.loss_points.len() - used, fallbacks })
    }

    /// Cost of the field with the given control targets.
    pub fn cost(&self, targets: &[Vector2<f64>]) -> Result<CostEval, RefineError> {
        let f = self.prepare_field(targets);
        self.cost_from_displacements(&f.at_sources, &f.at_loss)
    }

    /// Surface points `φ_d(p_i)` for the given control targets.
    pub fn points_for(&self, targets: &[Vector2<f64>]) -> Result<Vec<Point3>, RefineError> {
        let f = self.prepare_field(targets);
        let recon = self.recon;
        recon
            .sources()
            .iter()
            .zip(recon.lifted_sources())
            .zip(&f.at_sources)
            .map(|((p, l), d)| Ok(Point3::from(l * recon.gamma0_at(&(p + d))?.value)))
            .collect()
    }
}

/// Dot product with four independent accumulators, which lets the
/// compiler vectorize it.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn gradient_matrix(m: usize, grads: &[Vec<[f64; 2]>]) -> DMatrix<f64> {
    DMatrix::from_fn(m, 2 * grads.len(), |i, c| grads[c / 2][i][c % 2])
}

impl Objective for CostModel<'_> {
    type Prepared = PreparedField;

    fn dimension(&self) -> usize {
        self.grid.len()
    }

    fn evaluate(&self, targets: &[Vector2<f64>]) -> Result<CostEval, RefineError> {
        self.cost(targets)
    }

    fn prepare(&self, targets: &[Vector2<f64>]) -> Result<Self::Prepared, RefineError> {
        Ok(self.prepare_field(targets))
    }

    fn perturbed(&self, prepared: &Self::Prepared, index: usize, axis: usize, delta: f64) -> Result<f64, RefineError> {
        let shift = |base: &[Vector2<f64>], weights: &[f64]| {
            let n = base.len();
            let col = &weights[index * n..(index + 1) * n];
            let mut unit = Vector2::zeros();
            unit[axis] = delta;
            base.iter().zip(col).map(|(b, w)| b + unit * *w).collect::<Vec<_>>()
        };
        let at_sources = shift(&prepared.at_sources, &self.d_sources);
        let at_loss = shift(&prepared.at_loss, &self.d_loss);
        Ok(self.cost_from_displacements(&at_sources, &at_loss)?.value)
    }
}
