//! The four non-orientable flat 3-manifold families, built as explicit
//! crystallographic groups from their metric moduli.
//!
//! Conventions: the plane of `a₁, a₂` is `z = 0`, `a₁` lies on the x-axis and
//! `a₂ = λa₁ + v` with `v` along the y-axis.
//!
//! * `B1`: glide `(x, y, z) ↦ (x, y, −z) + a₁/2` with translations `a₂, a₃`,
//!   `a₃` vertical.
//! * `B2`: glides in the planes `z = 0` and `z = d` by `a₁/2` and `a₂/2`.
//! * `B3`: half-turn about the x-axis gliding by `a₁/2`, glide in `z = 0` by
//!   `a₂/2`, translation `a₃`; the `aᵢ` orthogonal.
//! * `B4`: as `B3` with the half-turn axis lifted to height `h` and no third
//!   generator; then `|a₃| = 4h`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{coset_shortest, gauss_reduce, AffineIsometry, Lattice, Mat3, Vec2, Vec3};
use crate::scan::{grid_refine, Axis, ScanConfig, ScanOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BieberbachType {
    B1,
    B2,
    B3,
    B4,
}

impl BieberbachType {
    pub const ALL: [Self; 4] = [Self::B1, Self::B2, Self::B3, Self::B4];

    /// Names of the moduli in positional order.
    pub fn moduli_names(self) -> [&'static str; 4] {
        match self {
            Self::B1 => ["a1", "a3", "lambda", "v"],
            Self::B2 => ["a1", "lambda", "v", "d"],
            Self::B3 => ["a1", "a2", "a3", ""],
            Self::B4 => ["a1", "a2", "h", ""],
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Self::B1 | Self::B2 => 4,
            Self::B3 | Self::B4 => 3,
        }
    }
}

impl fmt::Display for BieberbachType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::B1 => "B1",
            Self::B2 => "B2",
            Self::B3 => "B3",
            Self::B4 => "B4",
        };
        f.pad(s)
    }
}

impl FromStr for BieberbachType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "B1" => Ok(Self::B1),
            "B2" => Ok(Self::B2),
            "B3" => Ok(Self::B3),
            "B4" => Ok(Self::B4),
            _ => Err(Error::Parse(format!("unknown type {s:?}"))),
        }
    }
}

/// Metric moduli of a flat manifold of one of the four types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum BieberbachSpec {
    B1 {
        a1: f64,
        a3: f64,
        lambda: f64,
        v: f64,
    },
    B2 {
        a1: f64,
        lambda: f64,
        v: f64,
        d: f64,
    },
    B3 {
        a1: f64,
        a2: f64,
        a3: f64,
    },
    /// `h` is the distance between the glide plane and the half-turn axis.
    B4 {
        a1: f64,
        a2: f64,
        h: f64,
    },
}

impl BieberbachSpec {
    pub fn from_values(kind: BieberbachType, values: &[f64]) -> Result<Self> {
        if values.len() != kind.arity() {
            return Err(Error::Parse(format!(
                "{kind} takes {} moduli, got {}",
                kind.arity(),
                values.len()
            )));
        }
        let v = values;
        let spec = match kind {
            BieberbachType::B1 => Self::B1 {
                a1: v[0],
                a3: v[1],
                lambda: v[2],
                v: v[3],
            },
            BieberbachType::B2 => Self::B2 {
                a1: v[0],
                lambda: v[1],
                v: v[2],
                d: v[3],
            },
            BieberbachType::B3 => Self::B3 {
                a1: v[0],
                a2: v[1],
                a3: v[2],
            },
            BieberbachType::B4 => Self::B4 {
                a1: v[0],
                a2: v[1],
                h: v[2],
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn type_tag(&self) -> BieberbachType {
        match self {
            Self::B1 { .. } => BieberbachType::B1,
            Self::B2 { .. } => BieberbachType::B2,
            Self::B3 { .. } => BieberbachType::B3,
            Self::B4 { .. } => BieberbachType::B4,
        }
    }

    /// Moduli in positional order.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::B1 { a1, a3, lambda, v } => vec![a1, a3, lambda, v],
            Self::B2 { a1, lambda, v, d } => vec![a1, lambda, v, d],
            Self::B3 { a1, a2, a3 } => vec![a1, a2, a3],
            Self::B4 { a1, a2, h } => vec![a1, a2, h],
        }
    }

    /// `(name, value)` pairs in positional order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        self.type_tag()
            .moduli_names()
            .into_iter()
            .zip(self.values())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.params() {
            let ok = if name == "lambda" {
                value.is_finite()
            } else {
                value.is_finite() && value > 0.0
            };
            if !ok {
                return Err(Error::InvalidModulus { name, value });
            }
        }
        // finite moduli can still overflow or underflow together
        let volume = flat_volume(self);
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::DegenerateModuli(volume));
        }
        Ok(())
    }

    /// The spec of the manifold rescaled by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        match *self {
            Self::B1 { a1, a3, lambda, v } => Self::B1 {
                a1: t * a1,
                a3: t * a3,
                lambda,
                v: t * v,
            },
            Self::B2 { a1, lambda, v, d } => Self::B2 {
                a1: t * a1,
                lambda,
                v: t * v,
                d: t * d,
            },
            Self::B3 { a1, a2, a3 } => Self::B3 {
                a1: t * a1,
                a2: t * a2,
                a3: t * a3,
            },
            Self::B4 { a1, a2, h } => Self::B4 {
                a1: t * a1,
                a2: t * a2,
                h: t * h,
            },
        }
    }

    /// The planar vectors `a₁, a₂`.
    pub fn planar_basis(&self) -> (Vec2, Vec2) {
        match *self {
            Self::B1 { a1, lambda, v, .. } | Self::B2 { a1, lambda, v, .. } => {
                (Vec2::new(a1, 0.0), Vec2::new(lambda * a1, v))
            }
            Self::B3 { a1, a2, .. } | Self::B4 { a1, a2, .. } => {
                (Vec2::new(a1, 0.0), Vec2::new(0.0, a2))
            }
        }
    }

    /// Draws moduli uniformly from fixed per-type ranges.
    pub fn random<R: Rng + ?Sized>(kind: BieberbachType, rng: &mut R) -> Self {
        let length = |rng: &mut R| rng.random_range(0.2..3.0);
        match kind {
            BieberbachType::B1 => Self::B1 {
                a1: length(rng),
                a3: length(rng),
                lambda: rng.random_range(-1.5..1.5),
                v: rng.random_range(0.05..3.0),
            },
            BieberbachType::B2 => Self::B2 {
                a1: length(rng),
                lambda: rng.random_range(-1.5..1.5),
                v: rng.random_range(0.05..3.0),
                d: rng.random_range(0.02..1.5),
            },
            BieberbachType::B3 => Self::B3 {
                a1: length(rng),
                a2: length(rng),
                a3: length(rng),
            },
            BieberbachType::B4 => Self::B4 {
                a1: length(rng),
                a2: length(rng),
                h: rng.random_range(0.05..1.0),
            },
        }
    }
}

impl fmt::Display for BieberbachSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.type_tag())?;
        for (name, value) in self.params() {
            write!(f, " {name}={value}")?;
        }
        Ok(())
    }
}

/// Parses a type tag followed by moduli, given positionally or as
/// `name=value`, e.g. `B3 2 2 1` or `B4 a1=2 a2=2 h=0.25`.
impl FromStr for BieberbachSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let kind: BieberbachType = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty spec".into()))?
            .parse()?;
        let names = &kind.moduli_names()[..kind.arity()];
        let values = parse_moduli(tokens, names)?;
        Self::from_values(kind, &values)
    }
}

/// Fills `names` from positional or `name=value` tokens.
pub(crate) fn parse_moduli<'a>(
    tokens: impl Iterator<Item = &'a str>,
    names: &[&str],
) -> Result<Vec<f64>> {
    let mut values: Vec<Option<f64>> = vec![None; names.len()];
    let mut next = 0;
    for token in tokens {
        let (slot, text) = match token.split_once('=') {
            Some((key, text)) => {
                let slot = names
                    .iter()
                    .position(|n| n.eq_ignore_ascii_case(key))
                    .ok_or_else(|| Error::Parse(format!("unknown modulus {key:?}")))?;
                (slot, text)
            }
            None => {
                while next < names.len() && values[next].is_some() {
                    next += 1;
                }
                if next == names.len() {
                    return Err(Error::Parse(format!("unexpected token {token:?}")));
                }
                (next, token)
            }
        };
        if values[slot].is_some() {
            return Err(Error::Parse(format!("{} given twice", names[slot])));
        }
        let value: f64 = text
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
        values[slot] = Some(value);
    }
    values
        .into_iter()
        .zip(names)
        .map(|(v, name)| v.ok_or_else(|| Error::Parse(format!("missing {name}"))))
        .collect()
}

/// Generators of the group together with its translation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPresentation {
    pub generators: Vec<AffineIsometry>,
    pub lattice: Lattice,
}

impl GroupPresentation {
    /// One element per linear part among the words of length at most two in
    /// the generators; the identity comes first with zero shift.
    pub fn coset_representatives(&self) -> Vec<AffineIsometry> {
        let mut words = vec![AffineIsometry::identity()];
        words.extend(self.generators.iter().copied());
        for g in &self.generators {
            for h in &self.generators {
                words.push(g.compose(h));
            }
        }
        let mut reps: Vec<AffineIsometry> = Vec::new();
        for w in words {
            if !reps.iter().any(|r| (r.linear() - w.linear()).amax() < 1e-9) {
                reps.push(w);
            }
        }
        reps
    }

    /// Order of the point group.
    pub fn holonomy_order(&self) -> usize {
        self.coset_representatives().len()
    }
}

fn e_z() -> Vec3 {
    Vec3::z()
}

pub fn build_group(spec: &BieberbachSpec) -> Result<GroupPresentation> {
    spec.validate()?;
    let (p1, p2) = spec.planar_basis();
    let a1 = Vec3::new(p1.x, p1.y, 0.0);
    let a2 = Vec3::new(p2.x, p2.y, 0.0);
    let origin = Vec3::zeros();
    let (generators, basis) = match *spec {
        BieberbachSpec::B1 { a3, .. } => {
            let a3 = a3 * e_z();
            let sigma = AffineIsometry::plane_glide(e_z(), origin, a1 / 2.0)?;
            (
                vec![
                    sigma,
                    AffineIsometry::translation(a2),
                    AffineIsometry::translation(a3),
                ],
                vec![a1, a2, a3],
            )
        }
        BieberbachSpec::B2 { d, .. } => {
            let sigma1 = AffineIsometry::plane_glide(e_z(), origin, a1 / 2.0)?;
            let sigma2 = AffineIsometry::plane_glide(e_z(), d * e_z(), a2 / 2.0)?;
            let a3 = (a1 + a2) / 2.0 + 2.0 * d * e_z();
            (vec![sigma1, sigma2], vec![a1, a2, a3])
        }
        BieberbachSpec::B3 { a3, .. } => {
            let a3 = a3 * e_z();
            let sigma_d = AffineIsometry::line_glide(Vec3::x(), origin, a1 / 2.0)?;
            let sigma_p = AffineIsometry::plane_glide(e_z(), origin, a2 / 2.0)?;
            (
                vec![sigma_d, sigma_p, AffineIsometry::translation(a3)],
                vec![a1, a2, a3],
            )
        }
        BieberbachSpec::B4 { h, .. } => {
            let sigma_d = AffineIsometry::line_glide(Vec3::x(), h * e_z(), a1 / 2.0)?;
            let sigma_p = AffineIsometry::plane_glide(e_z(), origin, a2 / 2.0)?;
            (vec![sigma_d, sigma_p], vec![a1, a2, 4.0 * h * e_z()])
        }
    };
    Ok(GroupPresentation {
        generators,
        lattice: Lattice::new(basis)?,
    })
}

pub fn flat_volume(spec: &BieberbachSpec) -> f64 {
    let (p1, p2) = spec.planar_basis();
    let area = (p1.x * p2.y - p1.y * p2.x).abs();
    match *spec {
        BieberbachSpec::B1 { a3, .. } => 0.5 * area * a3,
        BieberbachSpec::B2 { d, .. } => area * d,
        BieberbachSpec::B3 { a3, .. } => area * a3 / 4.0,
        BieberbachSpec::B4 { h, .. } => area * h,
    }
}

/// Shortest vector of `offset + lattice` (nonzero when `offset` is zero).
fn planar_coset(lattice: &Lattice, offset: Vec2) -> Result<f64> {
    coset_shortest(
        lattice,
        &Vec3::new(offset.x, offset.y, 0.0),
        &Mat3::identity(),
    )
}

pub fn flat_systole_closed(spec: &BieberbachSpec) -> Result<f64> {
    spec.validate()?;
    let (a1, a2) = spec.planar_basis();
    Ok(match *spec {
        BieberbachSpec::B1 { a3, .. } => {
            let torus = Lattice::planar(a1 / 2.0, a2)?;
            a3.min(planar_coset(&torus, Vec2::zeros())?)
        }
        BieberbachSpec::B2 { d, .. } => {
            let l = Lattice::planar(a1, a2)?;
            let diagonal = planar_coset(&l, (a1 + a2) / 2.0)?;
            [
                planar_coset(&l, a1 / 2.0)?,
                planar_coset(&l, a2 / 2.0)?,
                4.0 * d,
                (diagonal * diagonal + 4.0 * d * d).sqrt(),
                planar_coset(&l, Vec2::zeros())?,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
        }
        BieberbachSpec::B3 { a3, .. } => (a1.x / 2.0).min(a2.y / 2.0).min(a3),
        BieberbachSpec::B4 { h, .. } => (a1.x / 2.0).min(a2.y / 2.0).min(4.0 * h),
    })
}

/// Systole as the least displacement over all nontrivial group elements,
/// written as `t_λ ∘ g` for a coset representative `g` and `λ ∈ Λ`.
pub fn flat_systole_enum(spec: &BieberbachSpec) -> Result<f64> {
    let group = build_group(spec)?;
    let mut best = f64::INFINITY;
    for g in group.coset_representatives() {
        let length = coset_shortest(&group.lattice, g.shift(), &g.fixed_projector())?;
        best = best.min(length);
    }
    Ok(best)
}

/// `systole³ / volume` from the closed forms.
pub fn flat_ratio(spec: &BieberbachSpec) -> Result<f64> {
    Ok(flat_systole_closed(spec)?.powi(3) / flat_volume(spec))
}

/// Exact optimum and a maximizing spec.
pub fn optimal_flat_ratio(kind: BieberbachType) -> (f64, BieberbachSpec) {
    match kind {
        BieberbachType::B1 => (
            2.0 / 3f64.sqrt(),
            BieberbachSpec::B1 {
                a1: 2.0,
                a3: 1.0,
                lambda: 0.25,
                v: 3f64.sqrt() / 2.0,
            },
        ),
        BieberbachType::B2 => (
            8.0 / 39f64.sqrt(),
            BieberbachSpec::B2 {
                a1: 1.0,
                lambda: -5.0 / 8.0,
                v: 39f64.sqrt() / 8.0,
                d: 1.0 / 8.0,
            },
        ),
        BieberbachType::B3 => (
            1.0,
            BieberbachSpec::B3 {
                a1: 2.0,
                a2: 2.0,
                a3: 1.0,
            },
        ),
        BieberbachType::B4 => (
            1.0,
            BieberbachSpec::B4 {
                a1: 2.0,
                a2: 2.0,
                h: 0.25,
            },
        ),
    }
}

/// Closed-form expression of the optimum.
pub fn optimal_flat_expression(kind: BieberbachType) -> &'static str {
    match kind {
        BieberbachType::B1 => "2/sqrt(3)",
        BieberbachType::B2 => "8/sqrt(39)",
        BieberbachType::B3 | BieberbachType::B4 => "1",
    }
}

/// Scan axes over normalized moduli: `|a₃| = 1` for B1, B3, B4 (`h = 1/4`
/// for B4) and `|a₁| = 1` for B2.
pub fn flat_scan_axes(kind: BieberbachType) -> Vec<Axis> {
    match kind {
        BieberbachType::B1 => vec![
            Axis::new("a1", 0.5, 4.0),
            Axis::new("lambda", 0.0, 0.5),
            Axis::new("v", 0.1, 2.0),
        ],
        BieberbachType::B2 => vec![
            Axis::new("lambda", -1.0, 0.0),
            Axis::new("v", 0.1, 2.0),
            Axis::new("d", 0.01, 1.0),
        ],
        BieberbachType::B3 | BieberbachType::B4 => {
            vec![Axis::new("a1", 0.5, 4.0), Axis::new("a2", 0.5, 4.0)]
        }
    }
}

/// Spec at a point of the normalized scan box.
pub fn flat_spec_from_scan(kind: BieberbachType, point: &[f64]) -> Result<BieberbachSpec> {
    match kind {
        BieberbachType::B1 => {
            BieberbachSpec::from_values(kind, &[point[0], 1.0, point[1], point[2]])
        }
        BieberbachType::B2 => {
            BieberbachSpec::from_values(kind, &[1.0, point[0], point[1], point[2]])
        }
        BieberbachType::B3 => BieberbachSpec::from_values(kind, &[point[0], point[1], 1.0]),
        BieberbachType::B4 => BieberbachSpec::from_values(kind, &[point[0], point[1], 0.25]),
    }
}

pub fn scan_flat(kind: BieberbachType, config: &ScanConfig) -> Result<ScanOutcome> {
    grid_refine(&flat_scan_axes(kind), config, |p| {
        flat_spec_from_scan(kind, p)
            .and_then(|s| flat_ratio(&s))
            .ok()
    })
}

/// Reduces `(a₁, a₂)` under the moves that preserve the B2 group up to
/// relabeling: `a₂ ↦ a₂ ± 2a₁`, `a₁ ↦ a₁ ± 2a₂`. Returns the shorter vector
/// first.
pub fn two_reduce(mut a1: Vec2, mut a2: Vec2) -> (Vec2, Vec2) {
    loop {
        let mut changed = false;
        for sign in [1.0, -1.0] {
            if (a2 + sign * 2.0 * a1).norm() < a2.norm() * (1.0 - 1e-12) {
                a2 += sign * 2.0 * a1;
                changed = true;
            }
            if (a1 + sign * 2.0 * a2).norm() < a1.norm() * (1.0 - 1e-12) {
                a1 += sign * 2.0 * a2;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if a2.norm() < a1.norm() {
        (a2, a1)
    } else {
        (a1, a2)
    }
}

/// Shape of the planar torus lattice of a B1 spec: Gauss-reduced basis of
/// `⟨a₁/2, a₂⟩`.
pub fn b1_torus_basis(spec: &BieberbachSpec) -> Result<(Vec2, Vec2)> {
    let (a1, a2) = spec.planar_basis();
    gauss_reduce(a1 / 2.0, a2)
}
