use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point2;
use crate::sft::Displacement;
use crate::warps::{KernelKind, Warp, WarpError};

/// TPS displacement field interpolating `grid_targets` at `grid_points`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    grid_points: Vec<Point2>,
    grid_targets: Vec<Vector2<f64>>,
    warp: Warp,
}

impl DisplacementField {
    pub fn new(grid_points: Vec<Point2>, grid_targets: Vec<Vector2<f64>>) -> Result<Self, WarpError> {
        let warp = Warp::fit(&grid_points, &grid_targets, KernelKind::Tps)?;
        Ok(Self { grid_points, grid_targets, warp })
    }

    pub fn zeros(grid_points: Vec<Point2>) -> Result<Self, WarpError> {
        let n = grid_points.len();
        Self::new(grid_points, vec![Vector2::zeros(); n])
    }

    pub fn grid_points(&self) -> &[Point2] {
        &self.grid_points
    }

    pub fn grid_targets(&self) -> &[Vector2<f64>] {
        &self.grid_targets
    }

    pub fn warp(&self) -> &Warp {
        &self.warp
    }

    pub fn len(&self) -> usize {
        self.grid_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_points.is_empty()
    }
}

impl Displacement for DisplacementField {
    fn displacement_at(&self, p: &Point2) -> Vector2<f64> {
        self.warp.eval2(p).coords
    }
}

/// Random perturbation of the zero field: targets i.i.d. uniform on
/// `[-3h/10, 3h/10]²`.
pub fn init_field(grid: &[Point2], h: f64, seed: u64) -> Result<DisplacementField, WarpError> {
    let bound = 0.3 * h;
    let targets = if bound > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        grid.iter()
            .map(|_| Vector2::new(rng.random_range(-bound..=bound), rng.random_range(-bound..=bound)))
            .collect()
    } else {
        vec![Vector2::zeros(); grid.len()]
    };
    DisplacementField::new(grid.to_vec(), targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::{make_grid, step_parameter};

    #[test]
    fn init_respects_support_and_seed() {
        let grid = make_grid(100, 1.5);
        let h = step_parameter(grid.len());
        for seed in 0..5 {
            let f = init_field(&grid, h, seed).unwrap();
            assert!(f.grid_targets().iter().all(|t| t.amax() <= 0.3 * h));
        }
        let a = init_field(&grid, h, 42).unwrap();
        let b = init_field(&grid, h, 42).unwrap();
        assert_eq!(a, b);
        let zero = init_field(&grid, 0.0, 42).unwrap();
        assert!(zero.grid_targets().iter().all(|t| *t == Vector2::zeros()));
        assert_eq!(zero.displacement_at(&Point2::new(0.1, 0.2)), Vector2::zeros());
    }

    #[test]
    fn field_interpolates_targets() {
        let grid = make_grid(50, 1.2);
        let f = init_field(&grid, step_parameter(grid.len()), 3).unwrap();
        for (p, t) in f.grid_points().iter().zip(f.grid_targets()) {
            assert!((f.displacement_at(p) - t).norm() <= 1e-7 * (1.0 + t.norm()));
        }
    }
}
