//! Euclidean primitives: affine isometries of space, lattices of rank at most
//! three, basis reduction, and shortest vectors in (projected) lattice cosets.
//!
//! Planar objects are embedded in the plane `z = 0`, so every vector here is a
//! [`Vec3`].

use nalgebra::{DMatrix, DVector, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Absolute tolerance for comparing lengths.
pub const LENGTH_TOL: f64 = 1e-9;

const ORTHO_TOL: f64 = 1e-12;
const LLL_DELTA: f64 = 0.99;
const MAX_DENOMINATOR: i64 = 24;
const ENUMERATION_CAP: usize = 10_000_000;

/// An isometry `x ↦ linear·x + shift` of Euclidean 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineIsometry {
    linear: Mat3,
    shift: Vec3,
}

impl AffineIsometry {
    /// Orthogonality of `linear` is checked here once; operations trust it.
    pub fn new(linear: Mat3, shift: Vec3) -> Result<Self> {
        let deviation = (linear.transpose() * linear - Mat3::identity()).amax();
        if !(deviation <= ORTHO_TOL) {
            return Err(Error::NotOrthogonal(deviation));
        }
        if !shift.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidModulus {
                name: "shift",
                value: f64::NAN,
            });
        }
        Ok(Self { linear, shift })
    }

    pub fn identity() -> Self {
        Self {
            linear: Mat3::identity(),
            shift: Vec3::zeros(),
        }
    }

    pub fn translation(v: Vec3) -> Self {
        Self {
            linear: Mat3::identity(),
            shift: v,
        }
    }

    /// Glide reflection in the plane through `point` with unit normal
    /// direction `normal`, followed by the translation `glide` (parallel to
    /// the plane).
    pub fn plane_glide(normal: Vec3, point: Vec3, glide: Vec3) -> Result<Self> {
        let n = normal.try_normalize(0.0).ok_or(Error::DegenerateLattice)?;
        if n.dot(&glide).abs() > LENGTH_TOL * (1.0 + glide.norm()) {
            return Err(Error::InvalidModulus {
                name: "glide",
                value: n.dot(&glide),
            });
        }
        let reflection = Mat3::identity() - 2.0 * n * n.transpose();
        Self::new(reflection, (Mat3::identity() - reflection) * point + glide)
    }

    /// Half-turn about the line through `point` with direction `axis`,
    /// followed by the translation `glide` along that line.
    pub fn line_glide(axis: Vec3, point: Vec3, glide: Vec3) -> Result<Self> {
        let u = axis.try_normalize(0.0).ok_or(Error::DegenerateLattice)?;
        if (glide - u * u.dot(&glide)).norm() > LENGTH_TOL * (1.0 + glide.norm()) {
            return Err(Error::InvalidModulus {
                name: "glide",
                value: glide.norm(),
            });
        }
        let half_turn = 2.0 * u * u.transpose() - Mat3::identity();
        Self::new(half_turn, (Mat3::identity() - half_turn) * point + glide)
    }

    pub fn linear(&self) -> &Mat3 {
        &self.linear
    }

    pub fn shift(&self) -> &Vec3 {
        &self.shift
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.linear * p + self.shift
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            linear: self.linear * other.linear,
            shift: self.linear * other.shift + self.shift,
        }
    }

    pub fn inverse(&self) -> Self {
        let lt = self.linear.transpose();
        Self {
            linear: lt,
            shift: -(lt * self.shift),
        }
    }

    pub fn is_translation(&self) -> bool {
        (self.linear - Mat3::identity()).amax() <= ORTHO_TOL
    }

    /// Orthogonal projector onto the fixed subspace `ker(linear − I)`.
    pub fn fixed_projector(&self) -> Mat3 {
        let svd = (self.linear - Mat3::identity()).svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut projector = Mat3::zeros();
        for (i, sigma) in svd.singular_values.iter().enumerate() {
            if *sigma < 1e-9 {
                let v: Vec3 = v_t.row(i).transpose();
                projector += v * v.transpose();
            }
        }
        projector
    }

    /// Minimal displacement `inf_p |iso(p) − p|`: the length of the component
    /// of the shift along the fixed subspace of the linear part.
    pub fn displacement(&self) -> f64 {
        (self.fixed_projector() * self.shift).norm()
    }
}

/// Displacement of an affine isometry of Euclidean space.
pub fn displacement(iso: &AffineIsometry) -> f64 {
    iso.displacement()
}

/// A lattice of rank 1 to 3 embedded in 3-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: Vec<Vec3>,
}

impl Lattice {
    pub fn new(basis: Vec<Vec3>) -> Result<Self> {
        if basis.is_empty() || basis.len() > 3 {
            return Err(Error::DegenerateLattice);
        }
        if !basis.iter().flat_map(|b| b.iter()).all(|x| x.is_finite()) {
            return Err(Error::DegenerateLattice);
        }
        let scale: f64 = basis.iter().map(|b| b.norm_squared()).product();
        let det = gram(&basis).determinant();
        if !(scale > 0.0) || !(det > 1e-12 * scale) {
            return Err(Error::DegenerateLattice);
        }
        Ok(Self { basis })
    }

    pub fn planar(b1: Vec2, b2: Vec2) -> Result<Self> {
        Self::new(vec![embed(&b1), embed(&b2)])
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec3] {
        &self.basis
    }

    pub fn gram_determinant(&self) -> f64 {
        gram(&self.basis).determinant()
    }

    /// Volume of a fundamental domain in the span of the lattice.
    pub fn covolume(&self) -> f64 {
        self.gram_determinant().max(0.0).sqrt()
    }

    /// LLL-reduced basis of the same lattice.
    pub fn reduced(&self) -> Lattice {
        let mut basis = self.basis.clone();
        lll_reduce(&mut basis);
        Lattice { basis }
    }

    /// Real coordinates of `v` in this basis, if `v` lies in the span.
    pub fn coordinates(&self, v: &Vec3) -> Option<Vec<f64>> {
        let r = self.rank();
        let g = gram(&self.basis);
        let rhs = DVector::from_iterator(r, self.basis.iter().map(|b| b.dot(v)));
        let c = g.lu().solve(&rhs)?;
        let back: Vec3 = self.basis.iter().zip(c.iter()).map(|(b, x)| b * *x).sum();
        if (back - v).norm() > 1e-9 * (1.0 + v.norm()) {
            return None;
        }
        Some(c.iter().copied().collect())
    }

    pub fn contains(&self, v: &Vec3) -> bool {
        self.coordinates(v)
            .is_some_and(|c| c.iter().all(|x| (x - x.round()).abs() < 1e-6))
    }

    /// True when both bases generate the same set of points.
    pub fn same_lattice(&self, other: &Lattice) -> bool {
        self.rank() == other.rank()
            && self.basis.iter().all(|b| other.contains(b))
            && other.basis.iter().all(|b| self.contains(b))
    }

    /// Length of a shortest nonzero lattice vector.
    pub fn minimum(&self) -> f64 {
        coset_shortest(self, &Vec3::zeros(), &Mat3::identity())
            .expect("identity projector on a valid lattice")
    }
}

pub fn embed(v: &Vec2) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

fn gram(basis: &[Vec3]) -> DMatrix<f64> {
    let r = basis.len();
    DMatrix::from_fn(r, r, |i, j| basis[i].dot(&basis[j]))
}

/// Lagrange–Gauss reduction of a planar basis. The result satisfies
/// `|b₁| ≤ |b₂| ≤ |b₂ ± b₁|`, has `b₁·b₂ ≥ 0`, and generates the same lattice.
pub fn gauss_reduce(b1: Vec2, b2: Vec2) -> Result<(Vec2, Vec2)> {
    let (mut u, mut v) = (b1, b2);
    let det = u.perp(&v);
    let scale = u.norm() * v.norm();
    if !det.is_finite() || !(det.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateLattice);
    }
    loop {
        if u.norm_squared() > v.norm_squared() {
            std::mem::swap(&mut u, &mut v);
        }
        let ratio = u.dot(&v) / u.norm_squared();
        if ratio.abs() <= 0.5 + 1e-12 {
            break;
        }
        v -= ratio.round() * u;
    }
    if u.dot(&v) < 0.0 {
        v = -v;
    }
    Ok((u, v))
}

struct GramSchmidt {
    star: Vec<Vec3>,
    star_sq: Vec<f64>,
    mu: [[f64; 3]; 3],
}

fn gram_schmidt(basis: &[Vec3]) -> GramSchmidt {
    let mut star: Vec<Vec3> = Vec::with_capacity(basis.len());
    let mut star_sq = Vec::with_capacity(basis.len());
    let mut mu = [[0.0; 3]; 3];
    for (i, b) in basis.iter().enumerate() {
        let mut s = *b;
        for j in 0..i {
            mu[i][j] = b.dot(&star[j]) / star_sq[j];
            s -= mu[i][j] * star[j];
        }
        star_sq.push(s.norm_squared());
        star.push(s);
    }
    GramSchmidt { star, star_sq, mu }
}

fn lll_reduce(basis: &mut [Vec3]) {
    let r = basis.len();
    let mut k = 1;
    let mut iterations = 0;
    while k < r && iterations < 10_000 {
        iterations += 1;
        for j in (0..k).rev() {
            let gs = gram_schmidt(basis);
            let q = gs.mu[k][j].round();
            if q != 0.0 {
                let bj = basis[j];
                basis[k] -= q * bj;
            }
        }
        let gs = gram_schmidt(basis);
        let mu = gs.mu[k][k - 1];
        if gs.star_sq[k] >= (LLL_DELTA - mu * mu) * gs.star_sq[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}

/// `min_λ |projector·(offset + λ)|` over the points `λ` of `lattice`.
///
/// When `offset` is exactly zero the zero vector is left out. The projector
/// must be an orthogonal projection mapping the lattice onto a discrete set
/// (true whenever it projects onto the fixed space of a linear map that
/// preserves the lattice).
pub fn coset_shortest(lattice: &Lattice, offset: &Vec3, projector: &Mat3) -> Result<f64> {
    if (projector * projector - projector).amax() > 1e-9
        || (projector - projector.transpose()).amax() > 1e-9
    {
        return Err(Error::InvalidProjector);
    }
    let exclude_zero = offset.iter().all(|x| *x == 0.0);
    if (projector - Mat3::identity()).amax() <= 1e-12 {
        return closest_in_coset(lattice.basis(), offset, exclude_zero);
    }
    let (generators, lost_rank) = projected_basis(lattice, projector)?;
    if exclude_zero && lost_rank {
        // some nonzero lattice vector lies in the kernel
        return Ok(0.0);
    }
    closest_in_coset(&generators, &(projector * offset), exclude_zero)
}

/// Basis of `projector(lattice)`. Returns it together with a flag telling
/// whether the projection dropped rank.
fn projected_basis(lattice: &Lattice, projector: &Mat3) -> Result<(Vec<Vec3>, bool)> {
    let r = lattice.rank();
    let images: Vec<Vec3> = lattice.basis().iter().map(|b| projector * b).collect();
    let mut coords = Vec::with_capacity(r);
    for image in &images {
        coords.push(
            lattice
                .coordinates(image)
                .ok_or(Error::NonDiscreteProjection)?,
        );
    }
    let denominator = (1..=MAX_DENOMINATOR)
        .find(|&k| {
            coords
                .iter()
                .flatten()
                .all(|x| (x * k as f64 - (x * k as f64).round()).abs() < 1e-6)
        })
        .ok_or(Error::NonDiscreteProjection)?;
    let integer_cols: Vec<Vec<i64>> = coords
        .iter()
        .map(|c| {
            c.iter()
                .map(|x| (x * denominator as f64).round() as i64)
                .collect()
        })
        .collect();
    let cols = integer_column_basis(integer_cols, r);
    let generators = cols
        .iter()
        .map(|col| {
            lattice
                .basis()
                .iter()
                .zip(col)
                .map(|(b, n)| b * (*n as f64))
                .sum::<Vec3>()
                / denominator as f64
        })
        .collect::<Vec<_>>();
    Ok((generators.clone(), generators.len() < r))
}

/// Echelon basis of the integer span of `cols`.
fn integer_column_basis(cols: Vec<Vec<i64>>, dim: usize) -> Vec<Vec<i64>> {
    let mut pool: Vec<Vec<i64>> = cols
        .into_iter()
        .filter(|c| c.iter().any(|&x| x != 0))
        .collect();
    let mut basis = Vec::new();
    for p in 0..dim {
        loop {
            let active: Vec<usize> = (0..pool.len()).filter(|&i| pool[i][p] != 0).collect();
            if active.len() <= 1 {
                break;
            }
            let pivot = *active.iter().min_by_key(|&&i| pool[i][p].abs()).unwrap();
            for &i in &active {
                if i != pivot {
                    let q = pool[i][p] / pool[pivot][p];
                    for t in 0..dim {
                        pool[i][t] -= q * pool[pivot][t];
                    }
                }
            }
        }
        if let Some(i) = pool.iter().position(|c| c[p] != 0) {
            basis.push(pool.swap_remove(i));
        }
        pool.retain(|c| c.iter().any(|&x| x != 0));
    }
    basis
}

/// `min |target + Σ nᵢ bᵢ|` over integer vectors `n` for an independent
/// family `generators`, by depth-first enumeration over the Gram–Schmidt
/// levels of an LLL-reduced copy. The search radius starts at a Babai
/// estimate and shrinks to the incumbent, so the result is exact up to
/// rounding.
fn closest_in_coset(generators: &[Vec3], target: &Vec3, exclude_zero: bool) -> Result<f64> {
    if generators.is_empty() {
        return Ok(if exclude_zero {
            f64::INFINITY
        } else {
            target.norm()
        });
    }
    let mut basis = generators.to_vec();
    lll_reduce(&mut basis);
    let gs = gram_schmidt(&basis);
    let r = basis.len();

    let mut tau = [0.0; 3];
    let mut parallel_sq = 0.0;
    for j in 0..r {
        tau[j] = target.dot(&gs.star[j]) / gs.star_sq[j];
        parallel_sq += tau[j] * tau[j] * gs.star_sq[j];
    }
    let perp_sq = (target.norm_squared() - parallel_sq).max(0.0);

    let mut best_sq = if exclude_zero {
        basis[0].norm_squared()
    } else {
        // Babai nearest plane
        let mut n = [0.0; 3];
        let mut sum = perp_sq;
        for j in (0..r).rev() {
            let shift: f64 = (j + 1..r).map(|i| gs.mu[i][j] * n[i]).sum();
            let center = -(tau[j] + shift);
            n[j] = center.round();
            let y = n[j] - center;
            sum += y * y * gs.star_sq[j];
        }
        sum
    };

    let mut search = Enumeration {
        gs: &gs,
        tau,
        perp_sq,
        exclude_zero,
        best_sq: &mut best_sq,
        coeffs: [0.0; 3],
        visited: 0,
    };
    search.descend(r, 0.0)?;
    Ok(best_sq.sqrt())
}

struct Enumeration<'a> {
    gs: &'a GramSchmidt,
    tau: [f64; 3],
    perp_sq: f64,
    exclude_zero: bool,
    best_sq: &'a mut f64,
    coeffs: [f64; 3],
    visited: usize,
}

impl Enumeration<'_> {
    /// Fix coefficient `level − 1` given the ones above it.
    fn descend(&mut self, level: usize, partial: f64) -> Result<()> {
        self.visited += 1;
        if self.visited > ENUMERATION_CAP {
            return Err(Error::ResourceBound("lattice enumeration".into()));
        }
        if level == 0 {
            if self.exclude_zero && self.coeffs.iter().all(|c| *c == 0.0) {
                return Ok(());
            }
            let total = self.perp_sq + partial;
            if total < *self.best_sq {
                *self.best_sq = total;
            }
            return Ok(());
        }
        let j = level - 1;
        let r = self.gs.star.len();
        let shift: f64 = (j + 1..r).map(|i| self.gs.mu[i][j] * self.coeffs[i]).sum();
        let center = -(self.tau[j] + shift);
        let room = *self.best_sq * (1.0 + 1e-12) - self.perp_sq - partial;
        if room < 0.0 {
            return Ok(());
        }
        let width = (room / self.gs.star_sq[j]).sqrt();
        let lo = (center - width).ceil() as i64;
        let hi = (center + width).floor() as i64;
        for n in lo..=hi {
            let y = n as f64 - center;
            let contribution = y * y * self.gs.star_sq[j];
            if self.perp_sq + partial + contribution > *self.best_sq * (1.0 + 1e-12) {
                continue;
            }
            self.coeffs[j] = n as f64;
            self.descend(level - 1, partial + contribution)?;
        }
        self.coeffs[j] = 0.0;
        Ok(())
    }
}
