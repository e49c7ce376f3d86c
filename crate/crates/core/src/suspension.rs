//! Singular 3-manifolds `(K × ℝ) / ((p, t) ↦ (φ(p), t + d))` over the
//! singular Klein bottle, one per flat type: `r_α` for B1, `T_δ` for B2,
//! `S₁` for B3 and `S₂` for B4.
//!
//! Nontrivial deck transformations are `(k∘φⁿ, t + nd)` with `k` in the deck
//! group of the Klein bottle. For `n ≠ 0` the least displacement over `k` is
//! `√(d(φⁿ)² + (nd)²)`, where `d(φⁿ)` is the displacement on the Klein
//! bottle; for `n = 0` it is the Klein bottle systole `π`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flat::{self, parse_moduli, BieberbachType};
use crate::scan::{grid_refine, Axis, ScanConfig, ScanOutcome};
use crate::surface::{self, KleinIsometry, KLEIN_AREA, KLEIN_SYSTOLE};

/// Least gap between singular and flat optima that the table asserts.
pub const TABLE_MARGIN: f64 = 0.02;

/// Most powers of the monodromy the systole search may examine.
pub const MAX_POWERS: u32 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuspensionSpec {
    pub base: KleinIsometry,
    pub d: f64,
}

impl SuspensionSpec {
    pub fn new(base: KleinIsometry, d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidModulus {
                name: "d",
                value: d,
            });
        }
        if relevant_powers(d) > MAX_POWERS {
            return Err(Error::ResourceBound(format!(
                "fibre length {d} needs more than {MAX_POWERS} powers"
            )));
        }
        match base {
            KleinIsometry::Rotation(a) | KleinIsometry::Screw(a) if !a.is_finite() => {
                return Err(Error::InvalidModulus {
                    name: "angle",
                    value: a,
                })
            }
            KleinIsometry::Antipody => {
                return Err(Error::Parse(
                    "the antipody is trivial on the Klein bottle".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { base, d })
    }

    pub fn for_type(kind: BieberbachType, angle: f64, d: f64) -> Result<Self> {
        let base = match kind {
            BieberbachType::B1 => KleinIsometry::Rotation(angle),
            BieberbachType::B2 => KleinIsometry::Screw(angle),
            BieberbachType::B3 => KleinIsometry::MeridianReflection,
            BieberbachType::B4 => KleinIsometry::DiameterReflection,
        };
        Self::new(base, d)
    }

    pub fn type_tag(&self) -> BieberbachType {
        match self.base {
            KleinIsometry::Rotation(_) => BieberbachType::B1,
            KleinIsometry::Screw(_) => BieberbachType::B2,
            KleinIsometry::MeridianReflection => BieberbachType::B3,
            KleinIsometry::DiameterReflection | KleinIsometry::Antipody => BieberbachType::B4,
        }
    }

    /// `(name, value)` pairs in positional order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.base {
            KleinIsometry::Rotation(a) => vec![("alpha", a), ("d", self.d)],
            KleinIsometry::Screw(a) => vec![("delta", a), ("d", self.d)],
            _ => vec![("d", self.d)],
        }
    }
}

fn parameter_names(kind: BieberbachType) -> &'static [&'static str] {
    match kind {
        BieberbachType::B1 => &["alpha", "d"],
        BieberbachType::B2 => &["delta", "d"],
        BieberbachType::B3 | BieberbachType::B4 => &["d"],
    }
}

impl fmt::Display for SuspensionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.type_tag())?;
        for (name, value) in self.params() {
            write!(f, " {name}={value}")?;
        }
        Ok(())
    }
}

/// Parses `B1 <alpha> <d>`, `B2 <delta> <d>`, `B3 <d>` or `B4 <d>`;
/// parameters may also be given as `name=value`.
impl FromStr for SuspensionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let kind: BieberbachType = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty spec".into()))?
            .parse()?;
        let values = parse_moduli(tokens, parameter_names(kind))?;
        match values[..] {
            [angle, d] => Self::for_type(kind, angle, d),
            [d] => Self::for_type(kind, 0.0, d),
            _ => Err(Error::Parse("wrong parameter count".into())),
        }
    }
}

pub fn suspension_volume(spec: &SuspensionSpec) -> f64 {
    KLEIN_AREA * spec.d
}

/// Powers `φⁿ` that can beat the base systole: `n ≤ ⌈π/d⌉ + 1`.
pub fn relevant_powers(d: f64) -> u32 {
    ((KLEIN_SYSTOLE / d).ceil() + 1.0).min(u32::MAX as f64) as u32
}

pub fn suspension_systole(spec: &SuspensionSpec) -> f64 {
    let mut best = KLEIN_SYSTOLE;
    for n in 1..=relevant_powers(spec.d) {
        let vertical = n as f64 * spec.d;
        if vertical >= best {
            break;
        }
        let horizontal = spec.base.power(n).displacement();
        best = best.min(horizontal.hypot(vertical));
    }
    best
}

pub fn singular_ratio(spec: &SuspensionSpec) -> f64 {
    suspension_systole(spec).powi(3) / suspension_volume(spec)
}

/// Parameters maximizing the ratio with systole `π`.
pub fn optimize_suspension(kind: BieberbachType) -> Result<(SuspensionSpec, f64)> {
    let spec = match kind {
        BieberbachType::B1 => {
            let alpha = surface::rotation_crossing();
            let displacement = surface::disp_rotation(alpha);
            SuspensionSpec::for_type(kind, alpha, (PI * PI - displacement * displacement).sqrt())?
        }
        BieberbachType::B2 => {
            let (delta0, d0) = surface::solve_delta0()?;
            SuspensionSpec::for_type(kind, delta0, d0)?
        }
        BieberbachType::B3 | BieberbachType::B4 => SuspensionSpec::for_type(kind, 0.0, PI)?,
    };
    Ok((spec, singular_ratio(&spec)))
}

/// Closed-form value of the singular optimum.
pub fn singular_optimum_exact(kind: BieberbachType) -> Result<f64> {
    Ok(match kind {
        BieberbachType::B1 => PI / (4.0 * (SQRT_2 - 1.0).sqrt()),
        BieberbachType::B2 => PI * PI / (2.0 * SQRT_2 * surface::solve_delta0()?.1),
        BieberbachType::B3 | BieberbachType::B4 => PI / (2.0 * SQRT_2),
    })
}

pub fn singular_optimum_expression(kind: BieberbachType) -> &'static str {
    match kind {
        BieberbachType::B1 => "pi/(4*sqrt(sqrt(2)-1))",
        BieberbachType::B2 => "pi^2/(2*sqrt(2)*d0)",
        BieberbachType::B3 | BieberbachType::B4 => "pi/(2*sqrt(2))",
    }
}

pub fn singular_scan_axes(kind: BieberbachType) -> Vec<Axis> {
    match kind {
        BieberbachType::B1 => vec![Axis::new("alpha", 0.0, PI), Axis::new("d", 0.5, 5.0)],
        BieberbachType::B2 => vec![Axis::new("delta", 0.0, PI), Axis::new("d", 0.5, 5.0)],
        BieberbachType::B3 | BieberbachType::B4 => vec![Axis::new("d", 0.5, 6.0)],
    }
}

pub fn singular_spec_from_scan(kind: BieberbachType, point: &[f64]) -> Result<SuspensionSpec> {
    match point {
        [angle, d] => SuspensionSpec::for_type(kind, *angle, *d),
        [d] => SuspensionSpec::for_type(kind, 0.0, *d),
        _ => Err(Error::Parse("wrong parameter count".into())),
    }
}

pub fn scan_singular(kind: BieberbachType, config: &ScanConfig) -> Result<ScanOutcome> {
    grid_refine(&singular_scan_axes(kind), config, |p| {
        singular_spec_from_scan(kind, p)
            .map(|s| singular_ratio(&s))
            .ok()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Argmax {
    pub flat: BTreeMap<&'static str, f64>,
    pub singular: BTreeMap<&'static str, f64>,
}

/// One row of the flat-versus-singular comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    #[serde(rename = "type")]
    pub type_tag: BieberbachType,
    pub flat_exact: &'static str,
    pub flat_value: f64,
    pub singular_exact: &'static str,
    pub singular_value: f64,
    pub argmax: Argmax,
}

impl RatioReport {
    pub fn singular_wins(&self) -> bool {
        self.singular_value > self.flat_value + TABLE_MARGIN
    }
}

pub fn ratio_report(kind: BieberbachType) -> Result<RatioReport> {
    let (_, flat_spec) = flat::optimal_flat_ratio(kind);
    let (singular_spec, singular_value) = optimize_suspension(kind)?;
    Ok(RatioReport {
        type_tag: kind,
        flat_exact: flat::optimal_flat_expression(kind),
        flat_value: flat::flat_ratio(&flat_spec)?,
        singular_exact: singular_optimum_expression(kind),
        singular_value,
        argmax: Argmax {
            flat: flat_spec.params().into_iter().collect(),
            singular: singular_spec.params().into_iter().collect(),
        },
    })
}

pub fn table_report() -> Result<Vec<RatioReport>> {
    BieberbachType::ALL.into_iter().map(ratio_report).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn volume_examples() {
        let s = |d| SuspensionSpec::for_type(BieberbachType::B3, 0.0, d).unwrap();
        assert_abs_diff_eq!(
            suspension_volume(&s(1.0)),
            8.885765876316732,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            suspension_volume(&s(PI)),
            2.0 * PI * PI * SQRT_2,
            epsilon = 1e-12
        );
        let (_, d0) = surface::solve_delta0().unwrap();
        assert_abs_diff_eq!(suspension_volume(&s(d0)), 23.47, epsilon = 5e-3);
    }

    #[test]
    fn systole_examples() {
        let b3 = SuspensionSpec::for_type(BieberbachType::B3, 0.0, PI).unwrap();
        assert_eq!(suspension_systole(&b3), PI);
        let b1 = SuspensionSpec::for_type(
            BieberbachType::B1,
            PI * (2.0 - SQRT_2),
            PI * (2.0 * SQRT_2 - 2.0).sqrt(),
        )
        .unwrap();
        assert_abs_diff_eq!(suspension_systole(&b1), PI, epsilon = 1e-12);
        let (b2, _) = optimize_suspension(BieberbachType::B2).unwrap();
        assert_abs_diff_eq!(suspension_systole(&b2), PI, epsilon = 1e-9);
    }

    #[test]
    fn reflections_give_vertical_loop() {
        for kind in [BieberbachType::B3, BieberbachType::B4] {
            let s = SuspensionSpec::for_type(kind, 0.0, 1.7).unwrap();
            assert_eq!(suspension_systole(&s), 1.7);
        }
    }

    #[test]
    fn optima_match_closed_forms() {
        for kind in BieberbachType::ALL {
            let (spec, ratio) = optimize_suspension(kind).unwrap();
            assert_eq!(spec.type_tag(), kind);
            assert_abs_diff_eq!(ratio, singular_optimum_exact(kind).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(suspension_systole(&spec), PI, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(
            singular_optimum_exact(BieberbachType::B1).unwrap(),
            1.220,
            epsilon = 5e-4
        );
        assert_abs_diff_eq!(
            singular_optimum_exact(BieberbachType::B2).unwrap(),
            1.321,
            epsilon = 5e-4
        );
        assert_abs_diff_eq!(
            singular_optimum_exact(BieberbachType::B3).unwrap(),
            1.1107,
            epsilon = 5e-5
        );
    }

    #[test]
    fn b1_optimum_parameters() {
        let (spec, _) = optimize_suspension(BieberbachType::B1).unwrap();
        let KleinIsometry::Rotation(alpha) = spec.base else {
            panic!()
        };
        assert_abs_diff_eq!(alpha, PI * (2.0 - SQRT_2), epsilon = 1e-15);
        assert_abs_diff_eq!(spec.d, PI * (2.0 * SQRT_2 - 2.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn higher_powers_are_long_at_b2_optimum() {
        let (spec, _) = optimize_suspension(BieberbachType::B2).unwrap();
        for n in 2..=10 {
            assert!(n as f64 * spec.d > PI);
        }
    }

    #[test]
    fn systole_bounded_by_first_power_and_pi() {
        for i in 0..50 {
            for j in 1..50 {
                let angle = PI * i as f64 / 49.0;
                let d = 0.1 * j as f64;
                for kind in BieberbachType::ALL {
                    let s = SuspensionSpec::for_type(kind, angle, d).unwrap();
                    let sys = suspension_systole(&s);
                    assert!(sys <= PI);
                    assert!(sys <= s.base.displacement().hypot(d) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn ratio_decreases_in_d_at_systole_pi() {
        let (b1, _) = optimize_suspension(BieberbachType::B1).unwrap();
        let KleinIsometry::Rotation(alpha) = b1.base else {
            panic!()
        };
        let mut previous = f64::INFINITY;
        for k in 0..20 {
            let d = b1.d + 0.1 * k as f64;
            let s = SuspensionSpec::for_type(BieberbachType::B1, alpha, d).unwrap();
            assert_abs_diff_eq!(suspension_systole(&s), PI, epsilon = 1e-9);
            let r = singular_ratio(&s);
            assert!(r < previous);
            previous = r;
        }
    }

    #[test]
    fn table_rows() {
        let rows = table_report().unwrap();
        assert_eq!(rows.len(), 4);
        let expected = [(1.154, 1.220), (1.281, 1.321), (1.0, 1.110), (1.0, 1.110)];
        for (row, (flat, singular)) in rows.iter().zip(expected) {
            assert!((row.flat_value - flat).abs() < 1e-3, "{row:?}");
            assert!((row.singular_value - singular).abs() < 1e-3, "{row:?}");
            assert!(row.singular_wins());
        }
    }

    #[test]
    fn tiny_fibre_is_a_resource_bound() {
        assert!(SuspensionSpec::for_type(BieberbachType::B2, 2.4, 1e-6).is_ok());
        assert!(matches!(
            SuspensionSpec::for_type(BieberbachType::B2, 2.4, 1e-300),
            Err(Error::ResourceBound(_))
        ));
    }

    #[test]
    fn parse_examples() {
        let s: SuspensionSpec = "B1 1.5 2".parse().unwrap();
        assert_eq!(s.base, KleinIsometry::Rotation(1.5));
        let s: SuspensionSpec = "b2 d=2 delta=0.5".parse().unwrap();
        assert_eq!((s.base, s.d), (KleinIsometry::Screw(0.5), 2.0));
        let s: SuspensionSpec = "B4 3".parse().unwrap();
        assert_eq!(s.base, KleinIsometry::DiameterReflection);
        for bad in [
            "", "B1 1", "B3 1 2", "B2 1 0", "B2 inf 1", "B9 1", "B3 d=-1",
        ] {
            assert!(bad.parse::<SuspensionSpec>().is_err(), "{bad:?}");
        }
        for text in ["B1 alpha=1.5 d=2", "B3 d=3.5"] {
            let s: SuspensionSpec = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
    }

    #[test]
    fn coarse_scans_stay_below_optima() {
        let config = ScanConfig {
            grid: 24,
            rounds: 2,
            shrink: 4.0,
        };
        for kind in BieberbachType::ALL {
            let exact = singular_optimum_exact(kind).unwrap();
            let out = scan_singular(kind, &config).unwrap();
            assert!(out.samples.iter().all(|s| s.value <= exact + 1e-9));
            assert!(out.best.value > exact - 0.05);
        }
    }
}
