use std::f64::consts::PI;

use rand::Rng;
use terrasample::sim::{normalize_angle, ContinuousPose, SimWorld, RAY_STEP};
use terrasample::{ClassMap, GridPose};

/// Entry and exit parameters of the ray through an axis-aligned box, if any.
fn slab(ox: f64, oy: f64, dx: f64, dy: f64, (x0, y0, x1, y1): (f64, f64, f64, f64)) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (o, d, a, b) in [(ox, dx, x0, x1), (oy, dy, y0, y1)] {
        if d.abs() < 1e-15 {
            if o < a || o >= b {
                return None;
            }
        } else {
            let (t0, t1) = ((a - o) / d, (b - o) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (hi > lo.max(0.0)).then_some((lo.max(0.0), hi))
}

/// Exact distance to the first obstacle box or the map border, plus the
/// chord length through the box that was hit (border hits report infinity).
fn exact_hit(world: &SimWorld, o: &ContinuousPose, angle: f64) -> (f64, f64) {
    let (dx, dy) = (angle.cos(), angle.sin());
    let (w, h) = (world.width() as f64, world.height() as f64);
    let (_, border) = slab(o.px, o.py, dx, dy, (0.0, 0.0, w, h)).unwrap();
    let mut best = (border, f64::INFINITY);
    for y in 0..world.height() {
        for x in 0..world.width() {
            if !world.is_obstacle(GridPose::new(x, y)) {
                continue;
            }
            let (x, y) = (x as f64, y as f64);
            if let Some((t0, t1)) = slab(o.px, o.py, dx, dy, (x, y, x + 1.0, y + 1.0)) {
                if t0 < best.0 {
                    best = (t0, t1 - t0);
                }
            }
        }
    }
    best
}

#[test]
fn ray_cast_matches_exact_intersection() {
    let mut rng = terrasample::rng::seeded(77);
    let mut checked = 0;
    for _ in 0..10 {
        let (w, h) = (rng.gen_range(8..20), rng.gen_range(8..20));
        let obstacles: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.2)).collect();
        let free: Vec<usize> = (0..w * h).filter(|&i| !obstacles[i]).collect();
        let cell = free[rng.gen_range(0..free.len())];
        let classes = ClassMap::new(w, h, 1, vec![0; w * h]).unwrap();
        let pose = ContinuousPose::new(
            (cell % w) as f64 + rng.gen_range(0.05..0.95),
            (cell / w) as f64 + rng.gen_range(0.05..0.95),
            normalize_angle(rng.gen_range(-PI..PI)),
        );
        let world = SimWorld::new(classes, obstacles, pose).unwrap();
        for _ in 0..40 {
            let offset = rng.gen_range(-PI..PI);
            let range = rng.gen_range(1.0..12.0);
            let (t, chord) = exact_hit(&world, &pose, pose.heading + offset);
            // a ray that only clips a box corner can slip between samples
            if chord < RAY_STEP {
                continue;
            }
            let got = world.ray_cast(&pose, offset, range).unwrap();
            let want = t.min(range);
            if t > range {
                assert_eq!(got, range);
            } else {
                assert!((got - want).abs() <= 0.5 * RAY_STEP + 1e-9, "got {got}, exact {want}");
            }
            checked += 1;
        }
    }
    assert!(checked > 300, "only {checked} rays checked");
}
