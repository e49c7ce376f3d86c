//! Closed-form geometry of the piecewise-spherical cylinder, torus and Klein
//! bottle carrying the metric `dφ² + f²(φ)dθ²`, where `f` is the
//! `2φ₀`-periodic extension of `cos φ` on `[−φ₀, φ₀]`.
//!
//! The cylinder is a stack of spherical zones `|φ| ≤ φ₀` ("patches") glued
//! along their boundary circles, the singular circles. Global latitude
//! `Φ = 2kφ₀ + φ` locates the point at local latitude `φ` in patch `k`.
//!
//! The Klein bottle is the quotient of the cylinder by
//! `(θ, Φ) ↦ (θ + π, −Φ)` and `(θ, Φ) ↦ (θ, Φ + 4φ₀)`. Distances and
//! displacements below assume `φ₀ = π/4`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2, TAU};

use serde::Serialize;

use crate::error::{Error, Result};

/// Patch half-height of the optimal Klein bottle.
pub const PHI0: f64 = FRAC_PI_4;

/// Area of the Klein bottle at `φ₀ = π/4`.
pub const KLEIN_AREA: f64 = 2.0 * PI * SQRT_2;

/// Systole of the Klein bottle at `φ₀ = π/4`.
pub const KLEIN_SYSTOLE: f64 = PI;

const ANGLE_SLACK: f64 = 1e-12;

/// A point of the singular cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    /// Longitude in radians.
    pub theta: f64,
    /// Local latitude inside the patch, `|phi| ≤ φ₀`.
    pub phi: f64,
    /// Which copy of the spherical zone along the axis.
    pub patch: i64,
}

impl SurfacePoint {
    pub fn new(theta: f64, phi: f64, patch: i64, phi0: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::OutOfRange {
                name: "theta",
                value: theta,
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            });
        }
        if !(phi.abs() <= phi0 + ANGLE_SLACK) {
            return Err(Error::OutOfRange {
                name: "phi",
                value: phi,
                lo: -phi0,
                hi: phi0,
            });
        }
        Ok(Self {
            theta,
            phi: phi.clamp(-phi0, phi0),
            patch,
        })
    }

    /// Point with global latitude `global_phi`; points on a singular circle
    /// are assigned to the patch below it.
    pub fn from_global(theta: f64, global_phi: f64, phi0: f64) -> Self {
        let mut patch = ((global_phi + phi0) / (2.0 * phi0)).floor() as i64;
        let mut phi = global_phi - 2.0 * phi0 * patch as f64;
        if (phi + phi0).abs() <= ANGLE_SLACK && patch > i64::MIN {
            // lower boundary of `patch` is the upper boundary of `patch - 1`
            patch -= 1;
            phi = phi0;
        }
        Self {
            theta,
            phi: phi.clamp(-phi0, phi0),
            patch,
        }
    }

    pub fn global_phi(&self, phi0: f64) -> f64 {
        2.0 * phi0 * self.patch as f64 + self.phi
    }

    /// Representative in the Klein-bottle fundamental domain
    /// `θ ∈ [0, π)`, `Φ ∈ [−φ₀, 3φ₀)`.
    pub fn canonical_klein(&self, phi0: f64) -> Self {
        let period = 4.0 * phi0;
        let wrap_phi = |phi: f64| (phi + phi0).rem_euclid(period) - phi0;
        let mut theta = self.theta.rem_euclid(TAU);
        let mut global = wrap_phi(self.global_phi(phi0));
        if theta >= PI {
            theta -= PI;
            global = wrap_phi(-global);
        }
        let mut p = Self::from_global(theta, global, phi0);
        // keep the representative inside the fundamental domain
        if p.patch < 0 {
            p = Self::from_global(theta, global + period, phi0);
        }
        p
    }

    /// Unit vector of this point on the sphere carrying its patch.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [cp * ct, cp * st, sp]
    }
}

/// Great-circle distance between two points of the same patch, measured on
/// the round sphere (law of cosines in the form robust for small angles).
pub fn sphere_distance(phi_a: f64, phi_b: f64, delta_theta: f64) -> f64 {
    // haversine
    let s_phi = ((phi_b - phi_a) / 2.0).sin();
    let s_theta = (delta_theta / 2.0).sin();
    let h = s_phi * s_phi + phi_a.cos() * phi_b.cos() * s_theta * s_theta;
    2.0 * h.sqrt().min(1.0).asin()
}

/// Isometries of the singular Klein bottle, as maps of the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "angle", rename_all = "snake_case")]
pub enum KleinIsometry {
    /// Rotation by `α` about the axis, `r_α`.
    Rotation(f64),
    /// Screw motion `T_δ`: shift by one patch composed with rotation by `δ`.
    Screw(f64),
    /// Reflection in a meridian plane, `S₁`.
    MeridianReflection,
    /// Half-turn about a diameter of a singular circle, `S₂`.
    DiameterReflection,
    /// Antipody about the centre of a patch sphere, `σ`; a deck
    /// transformation of the Klein bottle.
    Antipody,
}

impl KleinIsometry {
    /// Image of `(θ, Φ)` (global latitude) on the cylinder.
    pub fn apply_global(&self, theta: f64, global_phi: f64, phi0: f64) -> (f64, f64) {
        match *self {
            Self::Rotation(alpha) => (theta + alpha, global_phi),
            Self::Screw(delta) => (theta + delta, global_phi + 2.0 * phi0),
            Self::MeridianReflection => (-theta, global_phi),
            Self::DiameterReflection => (-theta, 2.0 * phi0 - global_phi),
            Self::Antipody => (theta + PI, -global_phi),
        }
    }

    pub fn apply(&self, p: &SurfacePoint, phi0: f64) -> SurfacePoint {
        let (theta, global) = self.apply_global(p.theta, p.global_phi(phi0), phi0);
        SurfacePoint::from_global(theta, global, phi0)
    }

    /// The `n`-th power as a Klein-bottle isometry. Two patch shifts are a
    /// deck transformation, so even powers of a screw motion are rotations.
    pub fn power(&self, n: u32) -> Self {
        let k = n as f64;
        match *self {
            Self::Rotation(alpha) => Self::Rotation(k * alpha),
            Self::Screw(delta) if n % 2 == 1 => Self::Screw(k * delta),
            Self::Screw(delta) => Self::Rotation(k * delta),
            other if n % 2 == 1 => other,
            _ => Self::Rotation(0.0),
        }
    }

    /// Displacement on the singular Klein bottle.
    pub fn displacement(&self) -> f64 {
        match *self {
            Self::Rotation(alpha) => disp_rotation(alpha),
            Self::Screw(delta) => disp_t(delta),
            // fixed points
            Self::MeridianReflection | Self::DiameterReflection => 0.0,
            // identity on the quotient
            Self::Antipody => 0.0,
        }
    }
}

/// Reduces an angle to `[0, π]` using `a ↔ 2π − a`.
pub fn canonical_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        TAU - a
    } else {
        a
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        })
    }
}

/// Latitude above which the chord between `(0, β)` and `(α, β)` leaves the
/// patch.
pub fn rotation_regime_boundary(alpha: f64) -> f64 {
    (canonical_angle(alpha) / 2.0).cos().atan()
}

fn acos_clamped(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Distance on the cylinder between a point at latitude `beta` and its image
/// under the rotation `r_α`.
///
/// Below the regime boundary the great-circle arc stays in the patch; above
/// it the geodesic runs along two great-circle arcs tangent to the singular
/// circle joined by an arc of that circle.
pub fn dist_rotation(beta: f64, alpha: f64) -> Result<f64> {
    check_finite("alpha", alpha)?;
    if !(-ANGLE_SLACK..=PHI0 + ANGLE_SLACK).contains(&beta) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            lo: 0.0,
            hi: PHI0,
        });
    }
    let beta = beta.clamp(0.0, PHI0);
    let alpha = canonical_angle(alpha);
    Ok(if beta <= rotation_regime_boundary(alpha) {
        rotation_chord(beta, alpha)
    } else {
        rotation_along_singular(beta, alpha)
    })
}

pub(crate) fn rotation_chord(beta: f64, alpha: f64) -> f64 {
    // arccos(sin²β + cos²β cos α)
    2.0 * (beta.cos() * (alpha / 2.0).sin()).min(1.0).asin()
}

pub(crate) fn rotation_along_singular(beta: f64, alpha: f64) -> f64 {
    // α/√2 − √2 arccos(tan β) + 2 arccos(√2 sin β)
    let root = (2.0 * beta).cos().max(0.0).sqrt();
    let s = beta.sin();
    alpha / SQRT_2 - SQRT_2 * root.atan2(s) + 2.0 * root.atan2(SQRT_2 * s)
}

/// Distance on the cylinder (and on the torus) between any point and its
/// image under the screw motion `T_δ`.
pub fn dist_t(delta: f64) -> Result<f64> {
    check_finite("delta", delta)?;
    let delta = canonical_angle(delta);
    Ok(acos_clamped((delta.cos() - 1.0) / 2.0))
}

/// Rotation angle `δ` of the screw motion that preserves the geodesic
/// crossing the singular circles at angle `beta`.
///
/// Defined for `beta ∈ (0, π/2]`; `δ` decreases from `π` (as `beta → 0`) to
/// `0` (meridians), passing `π/2` where `cot²β = 2`.
pub fn delta_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= FRAC_PI_2 + ANGLE_SLACK) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            lo: 0.0,
            hi: FRAC_PI_2,
        });
    }
    let cot = 1.0 / beta.min(FRAC_PI_2).tan();
    // tan δ = −2√2 cot β / (cot²β − 2), taken on the branch through δ(π/2) = 0
    let delta = (2.0 * SQRT_2 * cot).atan2(2.0 - cot * cot);
    Ok(delta.max(0.0))
}

/// `d(r_α) = min{α/√2, π − α}` on the Klein bottle.
pub fn disp_rotation(alpha: f64) -> f64 {
    let alpha = canonical_angle(alpha);
    (alpha / SQRT_2).min(PI - alpha)
}

/// `d(T_δ) = min{(π − δ)/√2, arccos((cos δ − 1)/2)}` on the Klein bottle.
pub fn disp_t(delta: f64) -> f64 {
    let delta = canonical_angle(delta);
    ((PI - delta) / SQRT_2).min(acos_clamped((delta.cos() - 1.0) / 2.0))
}

/// Rotation angle maximizing `d(r_α)`: the crossing of its two branches.
pub fn rotation_crossing() -> f64 {
    PI * (2.0 - SQRT_2)
}

/// Bisection on a verified sign change, to absolute tolerance `tol` in `x`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoBracket { lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// The screw angle `δ₀` where the two branches of `d(T_δ)` cross, and the
/// fibre length `d₀` with `d(T_δ₀)² + d₀² = π²`.
pub fn solve_delta0() -> Result<(f64, f64)> {
    let crossing = |delta: f64| (delta.cos() - 1.0) / 2.0 - ((PI - delta) / SQRT_2).cos();
    let delta0 = bisect(crossing, 0.0, PI, 1e-12)?;
    let displacement = disp_t(delta0);
    Ok((delta0, (PI * PI - displacement * displacement).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rotation_on_equator_is_alpha() {
        for alpha in [0.0, 0.3, 1.0, 2.0, 3.0, PI] {
            assert_abs_diff_eq!(dist_rotation(0.0, alpha).unwrap(), alpha, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_on_singular_circle_is_alpha_over_root_two() {
        for alpha in [0.1, 0.7, 1.5, 2.9, PI] {
            assert_abs_diff_eq!(
                dist_rotation(PHI0, alpha).unwrap(),
                alpha / SQRT_2,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rotation_reference_value() {
        // frozen from the geodesic-graph oracle (h = 0.0025, extrapolated)
        assert_abs_diff_eq!(
            dist_rotation(0.5, 2.0).unwrap(),
            1.661_595_931_358_491,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rotation_regimes_agree_at_boundary() {
        for i in 0..=200 {
            let alpha = PI * i as f64 / 200.0;
            let b = rotation_regime_boundary(alpha);
            let chord = rotation_chord(b, alpha);
            let bent = rotation_along_singular(b, alpha);
            assert!(
                (chord - bent).abs() < 1e-9,
                "alpha {alpha}: {chord} vs {bent}"
            );
        }
    }

    #[test]
    fn rotation_is_non_increasing_in_latitude() {
        for i in 0..200 {
            let alpha = PI * (i as f64 + 0.5) / 200.0;
            let mut previous = f64::INFINITY;
            for j in 0..200 {
                let beta = PHI0 * j as f64 / 199.0;
                let d = dist_rotation(beta, alpha).unwrap();
                assert!(d <= previous + 1e-12, "alpha {alpha} beta {beta}");
                previous = d;
            }
            // minimum over latitude is on the singular circle
            assert_abs_diff_eq!(previous, alpha / SQRT_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_rejects_bad_latitude() {
        assert!(dist_rotation(-0.1, 1.0).is_err());
        assert!(dist_rotation(0.8, 1.0).is_err());
        assert!(dist_rotation(0.3, f64::NAN).is_err());
    }

    #[test]
    fn rotation_angle_is_canonicalized() {
        let a = dist_rotation(0.4, 1.2).unwrap();
        assert_abs_diff_eq!(dist_rotation(0.4, TAU - 1.2).unwrap(), a, epsilon = 1e-12);
        assert_abs_diff_eq!(dist_rotation(0.4, 1.2 + TAU).unwrap(), a, epsilon = 1e-12);
    }

    #[test]
    fn screw_distance_examples() {
        assert_abs_diff_eq!(dist_t(0.0).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(dist_t(PI).unwrap(), PI, epsilon = 1e-15);
        let (delta0, _) = solve_delta0().unwrap();
        assert_abs_diff_eq!(delta0, 0.736, epsilon = 5e-4);
        assert_abs_diff_eq!(
            dist_t(delta0).unwrap(),
            (PI - delta0) / SQRT_2,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(dist_t(0.736).unwrap(), 1.7007, epsilon = 5e-4);
    }

    #[test]
    fn screw_distance_is_patch_crossing_length() {
        // independent route: a great circle of inclination φ_m crossing the
        // zone at angle β has cos φ_m = cos β cos φ₀ and spans
        // 2·asin(sin φ₀ / sin φ_m) between the singular circles
        for i in 1..=100 {
            let beta = FRAC_PI_2 * i as f64 / 100.0;
            let inclination = (beta.cos() * PHI0.cos()).acos();
            let length = 2.0 * (PHI0.sin() / inclination.sin()).asin();
            let delta = delta_from_beta(beta).unwrap();
            assert_abs_diff_eq!(dist_t(delta).unwrap(), length, epsilon = 1e-9);
        }
    }

    #[test]
    fn delta_from_beta_examples() {
        assert_abs_diff_eq!(delta_from_beta(FRAC_PI_2).unwrap(), 0.0, epsilon = 1e-12);
        let critical = (1.0 / 2f64.sqrt()).atan();
        assert_abs_diff_eq!(
            delta_from_beta(critical).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            delta_from_beta(FRAC_PI_4).unwrap(),
            (2.0 * SQRT_2).atan(),
            epsilon = 1e-12
        );
        // tangential crossings approach the half turn
        assert!(delta_from_beta(1e-6).unwrap() > PI - 1e-5);
        assert!(delta_from_beta(0.0).is_err());
        assert!(delta_from_beta(2.0).is_err());
    }

    #[test]
    fn delta_from_beta_is_monotone_onto() {
        let mut previous = PI;
        for i in 1..=1000 {
            let beta = FRAC_PI_2 * i as f64 / 1000.0;
            let delta = delta_from_beta(beta).unwrap();
            assert!(delta < previous);
            previous = delta;
        }
        assert!(previous.abs() < 1e-15);
    }

    #[test]
    fn rotation_displacement_examples() {
        assert_eq!(disp_rotation(0.0), 0.0);
        let crossing = rotation_crossing();
        assert_abs_diff_eq!(
            disp_rotation(crossing),
            PI * (SQRT_2 - 1.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(crossing / SQRT_2, PI - crossing, epsilon = 1e-12);
        assert_abs_diff_eq!(disp_rotation(3.0), PI - 3.0, epsilon = 1e-15);
    }

    #[test]
    fn screw_displacement_examples() {
        assert_abs_diff_eq!(disp_t(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(disp_t(0.0), FRAC_PI_2, epsilon = 1e-15);
        let (delta0, _) = solve_delta0().unwrap();
        let left = (PI - delta0) / SQRT_2;
        let right = ((delta0.cos() - 1.0) / 2.0).acos();
        assert!((left - right).abs() < 1e-9);
        assert_abs_diff_eq!(disp_t(delta0), 1.7007, epsilon = 1e-4);
    }

    #[test]
    fn displacement_maxima_sit_at_crossings() {
        let crossing = rotation_crossing();
        let (delta0, _) = solve_delta0().unwrap();
        for i in 0..=10_000 {
            let x = PI * i as f64 / 10_000.0;
            assert!(disp_rotation(x) <= disp_rotation(crossing) + 1e-12);
            assert!(disp_t(x) <= disp_t(delta0) + 1e-9);
        }
    }

    #[test]
    fn delta0_and_d0() {
        let (delta0, d0) = solve_delta0().unwrap();
        assert!((2.640..=2.642).contains(&d0), "d0 = {d0}");
        assert!(2.0 * d0 > PI);
        assert!(delta0 > 0.0 && delta0 < PI);
    }

    #[test]
    fn bisect_requires_bracket() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoBracket { .. })
        ));
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(root, SQRT_2, epsilon = 1e-13);
    }

    /// `b` is one of the deck images `(θ + kπ, (−1)^k Φ + 4mφ₀)` of `a`.
    fn same_klein_point(a: &SurfacePoint, b: &SurfacePoint) -> bool {
        let near = |x: f64, period: f64| {
            let r = x.rem_euclid(period);
            r < 1e-9 || period - r < 1e-9
        };
        let (pa, pb) = (a.global_phi(PHI0), b.global_phi(PHI0));
        (near(a.theta - b.theta, TAU) && near(pa - pb, 4.0 * PHI0))
            || (near(a.theta + PI - b.theta, TAU) && near(-pa - pb, 4.0 * PHI0))
    }

    #[test]
    fn isometries_descend_to_klein_bottle() {
        // g∘deck = deck'∘g for both generators of the deck group
        let isometries = [
            KleinIsometry::Rotation(0.9),
            KleinIsometry::Screw(0.7),
            KleinIsometry::MeridianReflection,
            KleinIsometry::DiameterReflection,
            KleinIsometry::Antipody,
        ];
        for g in isometries {
            for (theta, phi) in [(0.3, 0.1), (2.0, -0.7), (4.0, 1.9), (5.5, 0.785)] {
                let p = SurfacePoint::from_global(theta, phi, PHI0);
                let image = g.apply(&p, PHI0);
                let (t1, f1) = KleinIsometry::Antipody.apply_global(theta, phi, PHI0);
                for (t, f) in [(t1, f1), (theta, phi + 4.0 * PHI0)] {
                    let q = SurfacePoint::from_global(t, f, PHI0);
                    let other = g.apply(&q, PHI0);
                    assert!(
                        same_klein_point(&image, &other),
                        "{g:?}: {image:?} vs {other:?}"
                    );
                }
                assert!(same_klein_point(&p, &p.canonical_klein(PHI0)));
            }
        }
    }

    #[test]
    fn powers_match_repeated_application() {
        for g in [
            KleinIsometry::Rotation(1.1),
            KleinIsometry::Screw(0.8),
            KleinIsometry::MeridianReflection,
            KleinIsometry::DiameterReflection,
        ] {
            for n in 1..=4u32 {
                let p = SurfacePoint::from_global(0.4, 0.3, PHI0);
                let mut q = p;
                for _ in 0..n {
                    q = g.apply(&q, PHI0);
                }
                let r = g.power(n).apply(&p, PHI0);
                assert!(
                    same_klein_point(&q.canonical_klein(PHI0), &r.canonical_klein(PHI0)),
                    "{g:?}^{n}"
                );
            }
        }
    }

    #[test]
    fn klein_area_and_systole_constants() {
        // two patches of area 2π·2 sin φ₀, halved by the antipody
        assert_abs_diff_eq!(
            2.0 * TAU * 2.0 * PHI0.sin() / 2.0,
            KLEIN_AREA,
            epsilon = 1e-12
        );
        assert_eq!(KLEIN_SYSTOLE, PI);
    }

    proptest! {
        #[test]
        fn canonical_klein_is_idempotent(theta in -20.0f64..20.0, phi in -10.0f64..10.0) {
            let p = SurfacePoint::from_global(theta, phi, PHI0).canonical_klein(PHI0);
            prop_assert!(p.theta >= 0.0 && p.theta < PI + 1e-12);
            let g = p.global_phi(PHI0);
            prop_assert!(g >= -PHI0 - 1e-12 && g < 3.0 * PHI0 + 1e-12);
            let q = p.canonical_klein(PHI0);
            prop_assert!(same_klein_point(&p, &q));
        }

        #[test]
        fn sphere_distance_matches_law_of_cosines(
            a in -0.78f64..0.78, b in -0.78f64..0.78, t in 0.0f64..3.1
        ) {
            let cosine = a.sin() * b.sin() + a.cos() * b.cos() * t.cos();
            let reference = cosine.clamp(-1.0, 1.0).acos();
            prop_assert!((sphere_distance(a, b, t) - reference).abs() < 1e-7);
        }
    }
}
