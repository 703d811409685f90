use thiserror::Error;

use crate::geometry::Point3;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MetricError {
    #[error("point lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no points to compare")]
    Empty,
}

/// Root mean squared point-to-point distance of index-aligned lists.
pub fn rmse(reconstructed: &[Point3], gt: &[Point3]) -> Result<f64, MetricError> {
    Ok((squared_error_sum(reconstructed, gt)? / gt.len() as f64).sqrt())
}

/// `Σ ‖a_i − b_i‖²`, for pooling several datasets into one RMSE.
pub fn squared_error_sum(a: &[Point3], b: &[Point3]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum())
}

/// Relative reduction from `initial` to `refined`, in percent.
pub fn improvement_pct(initial: f64, refined: f64) -> f64 {
    100.0 * (initial - refined) / initial
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        let a = vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-1.0, 0.5, 2.0)];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&[Point3::new(3.0, 4.0, 0.0)], &[Point3::origin()]).unwrap(), 5.0);
        let b = vec![Point3::new(1.0, 0.0, 0.0), Point3::origin()];
        assert_relative_eq!(rmse(&b, &[Point3::origin(); 2]).unwrap(), 0.70711, epsilon = 1e-5);
        assert_eq!(rmse(&a, &a[..1]), Err(MetricError::LengthMismatch(2, 1)));
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
    }

    #[test]
    fn summary_helpers() {
        assert_relative_eq!(improvement_pct(1.24, 0.66), 46.774, epsilon = 1e-3);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_relative_eq!(s, 1.0);
    }

    proptest! {
        #[test]
        fn rmse_is_permutation_covariant(
            pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..30),
            rot in 0usize..30,
        ) {
            let a: Vec<Point3> = pts.iter().map(|p| Point3::new(p.0, p.1, p.2)).collect();
            let b: Vec<Point3> = pts.iter().map(|p| Point3::new(p.3, p.1, -p.2)).collect();
            let k = rot % a.len();
            let (mut pa, mut pb) = (a.clone(), b.clone());
            pa.rotate_left(k);
            pb.rotate_left(k);
            pa.reverse();
            pb.reverse();
            let r = rmse(&a, &b).unwrap();
            prop_assert!((rmse(&pa, &pb).unwrap() - r).abs() <= 1e-12 * (1.0 + r));
        }
    }
}
