//! Brute-force distances on the singular cylinder.
//!
//! Inside a patch the metric is round, so a shortest path is a chain of
//! great-circle arcs and arcs of singular circles, with corners only on the
//! singular circles. The graph here discretizes exactly those curves: nodes
//! sit on the singular circles, edges are the great-circle arcs joining the
//! two boundary circles of a patch and the arcs between neighbouring nodes of
//! one circle. Query points are joined to every node they see inside their
//! patch, and to each other when they share a patch.
//!
//! Each graph path is a curve on the surface of exactly the same length, so
//! graph distances bound true distances from above. Moving a corner along a
//! circle changes the length to second order, so the excess is `O(h²)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::surface::{self, sphere_distance, KleinIsometry, SurfacePoint};

pub const MAX_NODES: usize = 10_000_000;

const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    phi0: f64,
    patches: usize,
    h: f64,
    /// Nodes per singular circle.
    n: usize,
    /// Length of the arc across a patch between nodes `|i − j| = k` apart.
    cross: Vec<f64>,
    /// Length of the arc between neighbouring nodes of one circle.
    parallel: f64,
}

pub fn build_mesh(phi0: f64, patches: usize, h: f64) -> Result<SurfaceMesh> {
    if !(phi0 > 0.0 && phi0 < PI / 2.0) {
        return Err(Error::OutOfRange {
            name: "phi0",
            value: phi0,
            lo: 0.0,
            hi: PI / 2.0,
        });
    }
    if patches < 3 {
        return Err(Error::DegenerateMesh(format!(
            "{patches} patches, need at least 3"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::OutOfRange {
            name: "h",
            value: h,
            lo: 0.0,
            hi: PI / 2.0,
        });
    }
    if h >= PI / 2.0 {
        return Err(Error::DegenerateMesh(format!(
            "resolution {h} leaves fewer than 4 nodes per circle"
        )));
    }
    let n_float = (TAU / h).ceil();
    let nodes = (patches as f64 + 1.0) * n_float;
    if nodes > MAX_NODES as f64 {
        return Err(Error::ResourceBound(format!(
            "{nodes} mesh nodes exceed {MAX_NODES}"
        )));
    }
    let n = n_float as usize;
    let step = TAU / n as f64;
    let cross = (0..=n / 2)
        .map(|k| sphere_distance(-phi0, phi0, k as f64 * step))
        .collect();
    Ok(SurfaceMesh {
        phi0,
        patches,
        h,
        n,
        cross,
        parallel: phi0.cos() * step,
    })
}

/// Whether the minor great-circle arc between two points of one patch stays
/// inside the patch.
fn arc_admissible(phi0: f64, a: (f64, f64), b: (f64, f64)) -> bool {
    let (theta_a, phi_a) = a;
    let (theta_b, phi_b) = b;
    let angle = sphere_distance(phi_a, phi_b, theta_b - theta_a);
    if angle < 1e-14 {
        return true;
    }
    if angle > PI - 1e-9 {
        // antipodal: the arc is not determined
        return false;
    }
    let limit = phi0.sin() + SLACK;
    // z along the arc is A cos t + B sin t for t ∈ [0, angle]
    let za = phi_a.sin();
    let zb = phi_b.sin();
    let a_coef = za;
    let b_coef = (zb - za * angle.cos()) / angle.sin();
    let amplitude = a_coef.hypot(b_coef);
    if amplitude <= limit {
        return true;
    }
    let peak = b_coef.atan2(a_coef);
    [peak - PI, peak, peak + PI]
        .iter()
        .all(|&t| t <= 0.0 || t >= angle)
}

/// Heap entry ordered by distance, then node index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Edges from a query point: node index and weight.
type Links = Vec<(usize, f64)>;

impl SurfaceMesh {
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn nodes_per_circle(&self) -> usize {
        self.n
    }

    pub fn circle_count(&self) -> usize {
        self.patches + 1
    }

    pub fn node_count(&self) -> usize {
        self.circle_count() * self.n
    }

    /// Undirected edges between mesh nodes.
    pub fn edge_count(&self) -> usize {
        self.patches * self.n * self.n + self.circle_count() * self.n
    }

    pub fn node_theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n as f64
    }

    /// Global latitude of singular circle `c`: the bottom of patch `c`.
    pub fn circle_latitude(&self, c: usize) -> f64 {
        (2.0 * c as f64 - 1.0) * self.phi0
    }

    pub fn node_point(&self, index: usize) -> SurfacePoint {
        let (c, i) = (index / self.n, index % self.n);
        if c < self.patches {
            SurfacePoint {
                theta: self.node_theta(i),
                phi: -self.phi0,
                patch: c as i64,
            }
        } else {
            SurfacePoint {
                theta: self.node_theta(i),
                phi: self.phi0,
                patch: c as i64 - 1,
            }
        }
    }

    fn cross_weight(&self, i: usize, j: usize) -> f64 {
        let k = i.abs_diff(j);
        self.cross[k.min(self.n - k)]
    }

    /// Every undirected edge `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        let along = (0..self.circle_count()).flat_map(move |c| {
            (0..n).map(move |i| {
                let (u, v) = (c * n + i, c * n + (i + 1) % n);
                (u.min(v), u.max(v), self.parallel)
            })
        });
        let across = (0..self.patches).flat_map(move |c| {
            (0..n).flat_map(move |i| {
                (0..n).map(move |j| (c * n + i, (c + 1) * n + j, self.cross_weight(i, j)))
            })
        });
        along.chain(across)
    }

    /// Patches whose closure contains `p`, within the meshed range.
    fn patches_of(&self, p: &SurfacePoint) -> Result<Vec<usize>> {
        let global = p.global_phi(self.phi0);
        let lo = -self.phi0 - SLACK;
        let hi = (2.0 * self.patches as f64 - 1.0) * self.phi0 + SLACK;
        if !(global >= lo && global <= hi) {
            return Err(Error::OutOfRange {
                name: "latitude",
                value: global,
                lo: -self.phi0,
                hi: hi - SLACK,
            });
        }
        let k = (global / (2.0 * self.phi0)).round();
        let local = global - 2.0 * self.phi0 * k;
        let mut found = vec![k as i64];
        if local >= self.phi0 - SLACK {
            found.push(k as i64 + 1);
        } else if local <= -self.phi0 + SLACK {
            found.insert(0, k as i64 - 1);
        }
        Ok(found
            .into_iter()
            .filter(|&q| q >= 0 && (q as usize) < self.patches)
            .map(|q| q as usize)
            .collect())
    }

    /// `(θ, local latitude)` of a point in patch `k`.
    fn local(&self, p: &SurfacePoint, k: usize) -> (f64, f64) {
        let local = p.global_phi(self.phi0) - 2.0 * self.phi0 * k as f64;
        (p.theta, local.clamp(-self.phi0, self.phi0))
    }

    fn links(&self, p: &SurfacePoint) -> Result<Links> {
        let mut links = Vec::new();
        for k in self.patches_of(p)? {
            let here = self.local(p, k);
            for (c, phi) in [(k, -self.phi0), (k + 1, self.phi0)] {
                if (here.1 - phi).abs() <= SLACK {
                    // on this circle: the two nodes around it
                    let t = here.0.rem_euclid(TAU) / TAU * self.n as f64;
                    let below = (t.floor() as usize).min(self.n - 1);
                    for i in [below, (below + 1) % self.n] {
                        let gap = (here.0 - self.node_theta(i)).rem_euclid(TAU);
                        let gap = gap.min(TAU - gap);
                        links.push((c * self.n + i, self.phi0.cos() * gap));
                    }
                    continue;
                }
                for i in 0..self.n {
                    let node = (self.node_theta(i), phi);
                    if arc_admissible(self.phi0, here, node) {
                        let w = sphere_distance(here.1, phi, node.0 - here.0);
                        links.push((c * self.n + i, w));
                    }
                }
            }
        }
        Ok(links)
    }

    /// Direct arc between two query points, if they share a patch.
    fn direct(&self, p: &SurfacePoint, q: &SurfacePoint) -> Result<Option<f64>> {
        let shared: Vec<usize> = {
            let qs = self.patches_of(q)?;
            self.patches_of(p)?
                .into_iter()
                .filter(|k| qs.contains(k))
                .collect()
        };
        let mut best: Option<f64> = None;
        for k in shared {
            let (a, b) = (self.local(p, k), self.local(q, k));
            let w = if (a.1 - b.1).abs() <= SLACK && (a.1.abs() - self.phi0).abs() <= SLACK {
                // both on the same circle
                let gap = (a.0 - b.0).rem_euclid(TAU);
                self.phi0.cos() * gap.min(TAU - gap)
            } else if arc_admissible(self.phi0, a, b) {
                sphere_distance(a.1, b.1, b.0 - a.0)
            } else {
                continue;
            };
            best = Some(best.map_or(w, |x: f64| x.min(w)));
        }
        Ok(best)
    }

    /// Graph distances from `source` to each of `targets`.
    pub fn distances_from(
        &self,
        source: &SurfacePoint,
        targets: &[SurfacePoint],
    ) -> Result<Vec<f64>> {
        let v = self.node_count();
        let mut target_weight = vec![vec![f64::INFINITY; v]; targets.len()];
        for (t, q) in targets.iter().enumerate() {
            for (node, w) in self.links(q)? {
                let slot = &mut target_weight[t][node];
                *slot = slot.min(w);
            }
        }
        let mut best: Vec<f64> = targets
            .iter()
            .map(|q| Ok(self.direct(source, q)?.unwrap_or(f64::INFINITY)))
            .collect::<Result<_>>()?;

        let mut dist = vec![f64::INFINITY; v];
        let mut heap = BinaryHeap::new();
        for (node, w) in self.links(source)? {
            if w < dist[node] {
                dist[node] = w;
                heap.push(Entry { dist: w, node });
            }
        }
        let n = self.n;
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if best.iter().all(|&b| b <= d) {
                break;
            }
            for (t, weights) in target_weight.iter().enumerate() {
                best[t] = best[t].min(d + weights[node]);
            }
            let (c, i) = (node / n, node % n);
            let mut relax = |to: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
                let nd = d + w;
                if nd < dist[to] {
                    dist[to] = nd;
                    heap.push(Entry { dist: nd, node: to });
                }
            };
            relax(c * n + (i + 1) % n, self.parallel, &mut heap);
            relax(c * n + (i + n - 1) % n, self.parallel, &mut heap);
            for other in [c.wrapping_sub(1), c + 1] {
                if other < self.circle_count() {
                    for j in 0..n {
                        relax(other * n + j, self.cross_weight(i, j), &mut heap);
                    }
                }
            }
        }
        if best.iter().any(|b| !b.is_finite()) {
            return Err(Error::Unreachable);
        }
        Ok(best)
    }

    /// Shortest-path distance between two points of the meshed patches. The
    /// search runs from the lexicographically smaller endpoint, so the result
    /// is exactly symmetric.
    pub fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> Result<f64> {
        if p == q {
            self.patches_of(p)?;
            return Ok(0.0);
        }
        let key = |x: &SurfacePoint| (x.patch, x.phi, x.theta.rem_euclid(TAU));
        let (a, b) = if key(p).partial_cmp(&key(q)) == Some(Ordering::Greater) {
            (q, p)
        } else {
            (p, q)
        };
        Ok(self.distances_from(a, std::slice::from_ref(b))?[0])
    }

    /// Plain-text dump: `#` header lines, then `nodes <count>` followed by
    /// `patch,i,j,theta,phi` lines (`j` is 0 for the bottom circle of the
    /// patch and 1 for the top), then optionally `edges <count>` followed by
    /// `u,v,w` lines.
    pub fn dump(&self, with_edges: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# singular cylinder mesh");
        let _ = writeln!(
            out,
            "# phi0={} patches={} h={} per_circle={}",
            self.phi0, self.patches, self.h, self.n
        );
        let _ = writeln!(out, "nodes {}", self.node_count());
        for index in 0..self.node_count() {
            let p = self.node_point(index);
            let j = usize::from(p.phi > 0.0);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.patch,
                index % self.n,
                j,
                p.theta,
                p.phi
            );
        }
        if with_edges {
            let _ = writeln!(out, "edges {}", self.edge_count());
            for (u, v, w) in self.edges() {
                let _ = writeln!(out, "{u},{v},{w}");
            }
        }
        out
    }
}

pub fn mesh_distance(mesh: &SurfaceMesh, p: &SurfacePoint, q: &SurfacePoint) -> Result<f64> {
    mesh.distance(p, q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DumpNode {
    pub patch: i64,
    pub i: usize,
    pub j: u8,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshDump {
    pub header: Vec<String>,
    pub nodes: Vec<DumpNode>,
    pub edges: Vec<(usize, usize, f64)>,
}

fn field<T: FromStr>(text: Option<&str>, line: usize) -> Result<T> {
    text.and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: bad field")))
}

fn finite(x: f64, line: usize) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Parse(format!("line {line}: non-finite value")))
    }
}

fn section_count(line: Option<(usize, &str)>, keyword: &str) -> Result<Option<usize>> {
    let Some((number, text)) = line else {
        return Ok(None);
    };
    let mut parts = text.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(Error::Parse(format!(
            "line {number}: expected `{keyword} <count>`"
        )));
    }
    let count = field(parts.next(), number)?;
    if parts.next().is_some() {
        return Err(Error::Parse(format!("line {number}: trailing text")));
    }
    Ok(Some(count))
}

impl FromStr for MeshDump {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        let mut header = Vec::new();
        while let Some((_, l)) = lines.peek() {
            match l.strip_prefix('#') {
                Some(rest) => {
                    header.push(rest.trim().to_string());
                    lines.next();
                }
                None => break,
            }
        }
        let count = section_count(lines.next(), "nodes")?
            .ok_or_else(|| Error::Parse("missing nodes section".into()))?;
        let mut nodes = Vec::new();
        for _ in 0..count {
            let (number, text) = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated nodes section".into()))?;
            let mut parts = text.split(',');
            let node = DumpNode {
                patch: field(parts.next(), number)?,
                i: field(parts.next(), number)?,
                j: field(parts.next(), number)?,
                theta: finite(field(parts.next(), number)?, number)?,
                phi: finite(field(parts.next(), number)?, number)?,
            };
            if parts.next().is_some() || node.j > 1 {
                return Err(Error::Parse(format!("line {number}: malformed node")));
            }
            nodes.push(node);
        }
        let mut edges = Vec::new();
        if let Some(count) = section_count(lines.next(), "edges")? {
            for _ in 0..count {
                let (number, text) = lines
                    .next()
                    .ok_or_else(|| Error::Parse("truncated edges section".into()))?;
                let mut parts = text.split(',');
                let u: usize = field(parts.next(), number)?;
                let v: usize = field(parts.next(), number)?;
                let w = finite(field(parts.next(), number)?, number)?;
                if parts.next().is_some() || u >= nodes.len() || v >= nodes.len() || w < 0.0 {
                    return Err(Error::Parse(format!("line {number}: malformed edge")));
                }
                edges.push((u, v, w));
            }
        }
        if let Some((number, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::Parse(format!("line {number}: unexpected content")));
        }
        Ok(Self {
            header,
            nodes,
            edges,
        })
    }
}

/// Outcome of comparing mesh distances with the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub h: f64,
    pub samples: usize,
    pub seed: u64,
    /// Largest `(mesh − closed) / closed` over the rotation samples.
    pub rotation_max_rel_error: f64,
    /// Largest `(mesh − closed) / closed` over the screw samples.
    pub screw_max_rel_error: f64,
    /// Largest relative error for points on the singular circle.
    pub singular_circle_max_rel_error: f64,
    /// Largest `closed − mesh` over all samples; positive means the mesh
    /// found a shorter curve than the closed form.
    pub max_undershoot: f64,
    /// Spread of mesh distances `d(p, T_δ(p))` over base points, relative.
    pub screw_base_point_spread: f64,
}

impl OracleReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rotation_max_rel_error
            .max(self.screw_max_rel_error)
            .max(self.singular_circle_max_rel_error)
    }
}

/// Patches in the verification mesh; samples sit in patch 1.
pub const ORACLE_PATCHES: usize = 4;

/// Compares mesh distances against the closed forms for `samples` random
/// rotations `(β, α)` and `samples` random screws `(δ, base latitude)`, plus
/// a fixed set of points on the singular circle.
pub fn verify_closed_forms(h: f64, samples: usize, seed: u64) -> Result<OracleReport> {
    use rayon::prelude::*;

    let phi0 = surface::PHI0;
    let mesh = build_mesh(phi0, ORACLE_PATCHES, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.random_range(0.0..=phi0), rng.random_range(0.1..=PI)))
        .collect();
    let screws: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.random_range(0.0..=PI), rng.random_range(-phi0..=phi0)))
        .collect();

    let rotation_errors: Vec<(f64, f64)> = rotations
        .par_iter()
        .map(|&(beta, alpha)| {
            let p = SurfacePoint::new(0.0, beta, 1, phi0)?;
            let q = KleinIsometry::Rotation(alpha).apply(&p, phi0);
            let closed = surface::dist_rotation(beta, alpha)?;
            Ok((mesh.distance(&p, &q)?, closed))
        })
        .collect::<Result<_>>()?;
    let screw_errors: Vec<(f64, f64)> = screws
        .par_iter()
        .map(|&(delta, phi)| {
            let p = SurfacePoint::new(0.0, phi, 1, phi0)?;
            let q = KleinIsometry::Screw(delta).apply(&p, phi0);
            Ok((mesh.distance(&p, &q)?, surface::dist_t(delta)?))
        })
        .collect::<Result<_>>()?;
    let circle_errors: Vec<(f64, f64)> = (1..=10)
        .into_par_iter()
        .map(|k| {
            let alpha = PI * k as f64 / 10.0;
            let p = SurfacePoint::new(0.3, phi0, 1, phi0)?;
            let q = KleinIsometry::Rotation(alpha).apply(&p, phi0);
            Ok((mesh.distance(&p, &q)?, alpha / 2f64.sqrt()))
        })
        .collect::<Result<_>>()?;

    let rel = |pairs: &[(f64, f64)]| {
        pairs
            .iter()
            .map(|(m, c)| (m - c) / c)
            .fold(0.0f64, f64::max)
    };
    let undershoot = rotation_errors
        .iter()
        .chain(&screw_errors)
        .chain(&circle_errors)
        .map(|(m, c)| c - m)
        .fold(f64::NEG_INFINITY, f64::max);

    // the same δ from many base points
    let delta = screws.first().map_or(1.0, |s| s.0);
    let spread_samples: Vec<f64> = (0..50)
        .into_par_iter()
        .map(|k| {
            let phi = -phi0 + 2.0 * phi0 * k as f64 / 49.0;
            let p = SurfacePoint::new(0.1 * k as f64, phi, 1, phi0)?;
            let q = KleinIsometry::Screw(delta).apply(&p, phi0);
            mesh.distance(&p, &q)
        })
        .collect::<Result<_>>()?;
    let lo = spread_samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spread_samples
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(OracleReport {
        h,
        samples,
        seed,
        rotation_max_rel_error: rel(&rotation_errors),
        screw_max_rel_error: rel(&screw_errors),
        singular_circle_max_rel_error: rel(&circle_errors),
        max_undershoot: undershoot,
        screw_base_point_spread: (hi - lo) / lo,
    })
}

/// Latitudes sampled by [`klein_displacement`]: one period of the Klein
/// bottle in steps of `φ₀/2`, which includes every singular circle and every
/// patch equator.
pub fn displacement_latitudes(phi0: f64) -> Vec<f64> {
    (0..=8).map(|j| phi0 + j as f64 * phi0 / 2.0).collect()
}

/// Mesh estimate of the displacement of `g` on the Klein bottle: the least
/// distance on the cylinder from `x` to any deck image of `g(x)`, over base
/// points `x` at [`displacement_latitudes`]. The distance `d(x, g(x))`
/// depends only on the latitude of `x` because `g` commutes with rotations
/// up to a deck transformation.
pub fn klein_displacement(mesh: &SurfaceMesh, g: KleinIsometry) -> Result<f64> {
    let phi0 = mesh.phi0();
    let top = (2.0 * mesh.patches() as f64 - 1.0) * phi0;
    let mut best = f64::INFINITY;
    for latitude in displacement_latitudes(phi0) {
        let x = SurfacePoint::from_global(0.0, latitude, phi0);
        let (theta, global) = g.apply_global(x.theta, x.global_phi(phi0), phi0);
        let mut images = Vec::new();
        for k in 0..2 {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            for m in -3..=3 {
                let image_phi = sign * global + 4.0 * phi0 * m as f64;
                if image_phi >= -phi0 - SLACK && image_phi <= top + SLACK {
                    images.push(SurfacePoint::from_global(
                        theta + k as f64 * PI,
                        image_phi,
                        phi0,
                    ));
                }
            }
        }
        let distances = if images.contains(&x) {
            vec![0.0]
        } else {
            mesh.distances_from(&x, &images)?
        };
        best = distances.into_iter().fold(best, f64::min);
    }
    Ok(best)
}
