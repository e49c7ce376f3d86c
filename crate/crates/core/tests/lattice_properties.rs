//! Displacement of affine isometries against a direct minimization of
//! `|g(x) - x|` over a box.

use nalgebra::{Rotation3, Unit};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use systolica::lattice::{displacement, AffineIsometry, Mat3, Vec3};

const BOX: f64 = 20.0;

/// Coarse grid, then repeated refinement around the best point. The map is
/// convex, so the incumbent tracks the minimum set.
fn grid_minimum(g: &AffineIsometry) -> f64 {
    let f = |x: &Vec3| (g.apply(x) - x).norm();
    let steps = 16;
    let mut center = Vec3::zeros();
    let mut half = BOX;
    let mut best = f64::INFINITY;
    for _ in 0..14 {
        let mut incumbent = center;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let offset =
                        Vec3::new(i as f64, j as f64, k as f64) * (2.0 * half / steps as f64);
                    let x = center - Vec3::repeat(half) + offset;
                    let value = f(&x);
                    if value < best {
                        best = value;
                        incumbent = x;
                    }
                }
            }
        }
        center = incumbent;
        half *= 0.35;
    }
    best
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

fn point(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    )
}

/// `x ↦ L(x − p) + p + t`.
fn about(linear: Mat3, p: Vec3, t: Vec3) -> AffineIsometry {
    AffineIsometry::new(linear, p - linear * p + t).unwrap()
}

fn random_isometry(rng: &mut ChaCha8Rng, family: usize) -> AffineIsometry {
    let axis = unit(rng);
    let angle = rng.random_range(0.2..std::f64::consts::PI);
    let rotation = *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix();
    let reflection = Mat3::identity() - 2.0 * axis * axis.transpose();
    match family {
        0 => AffineIsometry::translation(point(rng)),
        1 => about(rotation, point(rng), axis * rng.random_range(-3.0..3.0)),
        2 => {
            let t = point(rng);
            about(reflection, point(rng), t - axis * axis.dot(&t))
        }
        _ => about(rotation * reflection, point(rng), Vec3::zeros()),
    }
}

#[test]
fn displacement_matches_direct_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let g = random_isometry(&mut rng, trial % 4);
        let exact = displacement(&g);
        let grid = grid_minimum(&g);
        assert!(
            grid >= exact - 1e-9,
            "trial {trial}: grid {grid} below {exact}"
        );
        assert!(grid - exact < 1e-4, "trial {trial}: grid {grid} vs {exact}");
    }
}

#[test]
fn displacement_is_conjugation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..200 {
        let g = random_isometry(&mut rng, trial % 4);
        let h = random_isometry(&mut rng, (trial + 1) % 4);
        let conjugate = h.compose(&g).compose(&h.inverse());
        assert!((displacement(&conjugate) - displacement(&g)).abs() < 1e-9);
        assert!((displacement(&g.inverse()) - displacement(&g)).abs() < 1e-9);
    }
}
