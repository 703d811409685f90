use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tearsft::geometry::Point2;
use tearsft::warps::{eval_warp, fit_warp, warp_jacobian, CenterPolicy, KernelKind, Warp};

fn random_sources(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point2> {
    (0..m).map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn fit_random(rng: &mut ChaCha8Rng, m: usize, dim: usize, kernel: KernelKind) -> (Vec<Point2>, Vec<Vec<f64>>, Warp) {
    let src = random_sources(rng, m);
    let targets: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let warp = match dim {
        2 => {
            let t: Vec<Point2> = targets.iter().map(|t| Point2::new(t[0], t[1])).collect();
            fit_warp(&src, &t, kernel).unwrap()
        }
        _ => {
            let t: Vec<tearsft::geometry::Point3> =
                targets.iter().map(|t| tearsft::geometry::Point3::new(t[0], t[1], t[2])).collect();
            fit_warp(&src, &t, kernel).unwrap()
        }
    };
    (src, targets, warp)
}

#[test]
fn interpolates_at_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kernel in [KernelKind::Tps, KernelKind::Lbw] {
        for dim in [2, 3] {
            for m in [10, 50, 200] {
                let (src, targets, warp) = fit_random(&mut rng, m, dim, kernel);
                let scale = 1.0 + targets.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                for (p, t) in src.iter().zip(&targets) {
                    let v = eval_warp(&warp, p);
                    let err = (v - DVector::from_column_slice(t)).amax();
                    assert!(err <= 1e-7 * scale, "{kernel} dim {dim} M {m}: residual {err}");
                }
            }
        }
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let step = 1e-5;
    for kernel in [KernelKind::Tps, KernelKind::Lbw] {
        for dim in [2, 3] {
            let (src, _, warp) = fit_random(&mut rng, 40, dim, kernel);
            let mut checked = 0;
            while checked < 100 {
                let p = Point2::new(rng.random_range(-0.95..0.95), rng.random_range(-0.95..0.95));
                // Central differences straddling an LBW center are not a derivative.
                if src.iter().any(|c| (c - p).norm() < 10.0 * step) {
                    continue;
                }
                let j = warp_jacobian(&warp, &p).unwrap();
                for axis in 0..2 {
                    let mut e = nalgebra::Vector2::zeros();
                    e[axis] = step;
                    let fd = (eval_warp(&warp, &(p + e)) - eval_warp(&warp, &(p - e))) / (2.0 * step);
                    let col = j.column(axis);
                    let rel = (&col - &fd).norm() / col.norm().max(1e-8);
                    assert!(rel <= 1e-4, "{kernel} dim {dim} at {p}: relative error {rel}");
                }
                checked += 1;
            }
        }
    }
}

#[test]
fn reproduces_affine_maps_away_from_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let src = random_sources(&mut rng, 30);
    let map = |p: &Point2| Point2::new(0.3 + 1.2 * p.x - 0.4 * p.y, -0.1 + 0.25 * p.x + 0.9 * p.y);
    let dst: Vec<Point2> = src.iter().map(map).collect();
    for kernel in [KernelKind::Tps, KernelKind::Lbw] {
        let w = fit_warp(&src, &dst, kernel).unwrap();
        assert!(w.max_rbf_coefficient() <= 1e-8);
        let q = Point2::new(0.77, -0.61);
        assert!((w.eval2(&q) - map(&q)).norm() <= 1e-9);
        let j = w.jacobian2(&q, CenterPolicy::Strict).unwrap();
        assert!((j - nalgebra::Matrix2::new(1.2, -0.4, 0.25, 0.9)).amax() <= 1e-9);
    }
}
