use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tearsft::geometry::{project, Camera, Point2};
use tearsft::synthgen::{etc_surface, gen_etc, gen_plane, EtcKind, EtcSpec, PlaneSpec, SynthError};

#[test]
fn pieces_are_isometric() {
    let step = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for kind in EtcKind::ALL {
        let spec = EtcSpec::identity(kind, 0);
        let mut checked = 0;
        while checked < 100 {
            let (s, t) = (rng.random_range(-0.99..0.99), rng.random_range(-0.99..0.99));
            // Keep the stencil off the tearing curve and the t = 0 fold.
            if spec.curve.distance(&Point2::new(s, t)) < 0.02 || t.abs() < 0.01 {
                continue;
            }
            let f = |ds: f64, dt: f64| etc_surface(&spec, s + ds, t + dt).unwrap().0;
            let ds = (f(step, 0.0) - f(-step, 0.0)) / (2.0 * step);
            let dt = (f(0.0, step) - f(0.0, -step)) / (2.0 * step);
            assert!((ds.norm() - 1.0).abs() <= 1e-4, "{kind} at ({s}, {t}): |d/ds| = {}", ds.norm());
            assert!((dt.norm() - 1.0).abs() <= 1e-4, "{kind} at ({s}, {t}): |d/dt| = {}", dt.norm());
            assert!(ds.dot(&dt).abs() <= 1e-4, "{kind} at ({s}, {t})");
            checked += 1;
        }
    }
}

#[test]
fn tears_are_continuous_within_a_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kind in [EtcKind::ExteriorTear, EtcKind::InteriorTear] {
        let spec = EtcSpec::identity(kind, 0);
        for _ in 0..500 {
            let p = Point2::new(rng.random_range(-0.95..0.95), rng.random_range(-0.95..0.95));
            let q = p + nalgebra::Vector2::new(rng.random_range(-7e-4..7e-4), rng.random_range(-7e-4..7e-4));
            let same_side = p.x.signum() == q.x.signum();
            let (Ok((a, _)), Ok((b, _))) = (etc_surface(&spec, p.x, p.y), etc_surface(&spec, q.x, q.y)) else {
                continue;
            };
            if same_side {
                assert!((a - b).norm() <= 1e-2, "{kind}: jump between {p} and {q}");
            }
        }
    }
}

#[test]
fn exterior_tear_opens() {
    let spec = EtcSpec::identity(EtcKind::ExteriorTear, 0);
    for t in [0.2, 0.5, 0.9] {
        let (left, _) = etc_surface(&spec, -0.02, t).unwrap();
        let (right, _) = etc_surface(&spec, 0.02, t).unwrap();
        assert!((left - right).norm() > 2.0 * 0.8f64.cos() * t - 0.05);
    }
    // Below the tear the sheet is intact.
    let (left, _) = etc_surface(&spec, -0.02, -0.5).unwrap();
    let (right, _) = etc_surface(&spec, 0.02, -0.5).unwrap();
    assert!((left - right).norm() <= 0.05);
}

#[test]
fn generated_instances_match_invariants() {
    let cameras = [Camera::identity(), Camera::new(800.0, 780.0, 320.0, 240.0).unwrap()];
    for kind in EtcKind::ALL {
        for seed in [1u64, 42] {
            for cam in &cameras {
                let spec = EtcSpec::new(kind, seed);
                let data = gen_etc(&spec, cam).unwrap();
                assert_eq!(data.len(), spec.n_points);
                assert_eq!(data.component_count(), kind.components());
                for (i, x) in data.gt_points.iter().enumerate() {
                    assert!(x.z > 0.0);
                    assert_eq!(project(x).unwrap(), data.image_points[i]);
                    assert!(spec.curve.distance(&data.param_points[i]) > spec.exclusion_band);
                }
            }
        }
    }
}

#[test]
fn identity_override_follows_raw_formulas() {
    let spec = EtcSpec::identity(EtcKind::SimpleDisconnection, 3);
    assert_eq!(etc_surface(&spec, -0.5, 0.25).unwrap().0, tearsft::geometry::Point3::new(-1.0, 0.25, 1.0));
    assert_eq!(etc_surface(&spec, 0.5, 0.25).unwrap(), (tearsft::geometry::Point3::new(1.0, 0.25, 1.0), 1));
    assert!(matches!(etc_surface(&spec, 0.0, 0.25), Err(SynthError::OnTearingCurve { .. })));
}

#[test]
fn planes_are_untorn() {
    let data = gen_plane(&PlaneSpec::tilted(4), &Camera::identity()).unwrap();
    assert_eq!(data.component_count(), 1);
    assert!(data.gt_points.iter().all(|x| x.z > 0.5));
}
