//! Grid search with local refinement for maximizing piecewise-smooth
//! objectives over a box.
//!
//! Each round evaluates a uniform grid (endpoints included) in parallel, then
//! reduces sequentially in grid order, so the outcome does not depend on the
//! thread count. The next round's box is the current one shrunk around the
//! incumbent and shifted back inside the original bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance under which two objective values tie.
pub const TIE_TOL: f64 = 1e-12;

const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    pub const fn new(name: &'static str, lo: f64, hi: f64) -> Self {
        Self { name, lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// Points per axis in every round.
    pub grid: usize,
    /// Refinement rounds after the initial grid.
    pub rounds: usize,
    /// Factor by which the box shrinks per round.
    pub shrink: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid: 64,
            rounds: 3,
            shrink: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub round: usize,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutcome {
    pub axes: Vec<Axis>,
    pub best: Sample,
    /// Every evaluation of round 0 followed by the incumbent after each
    /// refinement round.
    pub samples: Vec<Sample>,
    pub evaluations: usize,
}

/// `a` is preferred over `b`: larger value, ties to the lexicographically
/// smaller point.
fn prefer(a: &Sample, b: &Sample) -> bool {
    let scale = a.value.abs().max(b.value.abs()).max(f64::MIN_POSITIVE);
    let diff = a.value - b.value;
    if diff > TIE_TOL * scale {
        return true;
    }
    if diff < -TIE_TOL * scale {
        return false;
    }
    a.point
        .iter()
        .zip(&b.point)
        .find(|(x, y)| x != y)
        .is_some_and(|(x, y)| x < y)
}

fn grid_coordinate(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Maximizes `objective` over the box spanned by `axes`. Points where the
/// objective returns `None` or a non-finite value are skipped.
pub fn grid_refine<F>(axes: &[Axis], config: &ScanConfig, objective: F) -> Result<ScanOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if axes.is_empty() || config.grid == 0 || !(config.shrink > 1.0) {
        return Err(Error::OutOfRange {
            name: "grid",
            value: config.grid as f64,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    for axis in axes {
        if !(axis.lo.is_finite() && axis.hi.is_finite() && axis.lo <= axis.hi) {
            return Err(Error::OutOfRange {
                name: axis.name,
                value: axis.lo,
                lo: f64::NEG_INFINITY,
                hi: axis.hi,
            });
        }
    }
    let dims = axes.len();
    let total = (0..dims).try_fold(1usize, |acc, _| acc.checked_mul(config.grid));
    let total = match total {
        Some(t) if t <= MAX_GRID_POINTS => t,
        _ => {
            return Err(Error::ResourceBound(format!(
                "{}^{} grid points",
                config.grid, dims
            )))
        }
    };

    let mut bounds: Vec<(f64, f64)> = axes.iter().map(|a| (a.lo, a.hi)).collect();
    let mut best: Option<Sample> = None;
    let mut samples = Vec::new();
    let mut evaluations = 0;

    for round in 0..=config.rounds {
        let values: Vec<Option<(Vec<f64>, f64)>> = (0..total)
            .into_par_iter()
            .map(|index| {
                let mut rest = index;
                let mut point = vec![0.0; dims];
                for k in (0..dims).rev() {
                    let i = rest % config.grid;
                    rest /= config.grid;
                    point[k] = grid_coordinate(bounds[k].0, bounds[k].1, i, config.grid);
                }
                let value = objective(&point).filter(|v| v.is_finite())?;
                Some((point, value))
            })
            .collect();
        evaluations += total;

        for (point, value) in values.into_iter().flatten() {
            let sample = Sample {
                round,
                point,
                value,
            };
            let better = best.as_ref().is_none_or(|b| prefer(&sample, b));
            if round == 0 {
                samples.push(sample.clone());
            }
            if better {
                best = Some(sample);
            }
        }
        let incumbent = best.as_ref().ok_or(Error::Unreachable)?;
        if round > 0 {
            samples.push(Sample {
                round,
                ..incumbent.clone()
            });
        }

        for (k, axis) in axes.iter().enumerate() {
            let width = (bounds[k].1 - bounds[k].0) / config.shrink;
            let mut lo = incumbent.point[k] - width / 2.0;
            let mut hi = incumbent.point[k] + width / 2.0;
            if lo < axis.lo {
                lo = axis.lo;
                hi = axis.lo + width;
            }
            if hi > axis.hi {
                hi = axis.hi;
                lo = axis.hi - width;
            }
            bounds[k] = (lo, hi);
        }
    }

    Ok(ScanOutcome {
        axes: axes.to_vec(),
        best: best.ok_or(Error::Unreachable)?,
        samples,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScanConfig {
        ScanConfig {
            grid: 17,
            rounds: 3,
            shrink: 4.0,
        }
    }

    #[test]
    fn finds_interior_maximum_of_concave_function() {
        let axes = [Axis::new("x", -1.0, 1.0), Axis::new("y", 0.0, 3.0)];
        let out = grid_refine(&axes, &small(), |p| {
            Some(-(p[0] - 0.123).powi(2) - (p[1] - 2.71).powi(2))
        })
        .unwrap();
        assert!((out.best.point[0] - 0.123).abs() < 2e-3);
        assert!((out.best.point[1] - 2.71).abs() < 3e-3);
        assert_eq!(out.samples.len(), 17 * 17 + 3);
        assert_eq!(out.evaluations, 4 * 17 * 17);
    }

    #[test]
    fn finds_kink_maximum() {
        let axes = [Axis::new("x", 0.0, 4.0)];
        let out = grid_refine(&axes, &small(), |p| {
            Some((p[0] / 2f64.sqrt()).min(3.0 - p[0]))
        })
        .unwrap();
        let x = 3.0 * 2f64.sqrt() / (1.0 + 2f64.sqrt());
        assert!((out.best.point[0] - x).abs() < 2e-3);
    }

    #[test]
    fn maximum_on_boundary_stays_inside_box() {
        let axes = [Axis::new("x", 0.5, 2.0)];
        let out = grid_refine(&axes, &small(), |p| Some(p[0])).unwrap();
        assert_eq!(out.best.point[0], 2.0);
    }

    #[test]
    fn ties_go_to_smallest_point() {
        let axes = [Axis::new("x", 0.0, 1.0), Axis::new("y", 0.0, 1.0)];
        let out = grid_refine(&axes, &small(), |_| Some(1.0)).unwrap();
        assert_eq!(out.best.point, vec![0.0, 0.0]);
    }

    #[test]
    fn skipped_points_are_ignored() {
        let axes = [Axis::new("x", -1.0, 1.0)];
        let out = grid_refine(&axes, &small(), |p| (p[0] < 0.0).then_some(p[0])).unwrap();
        assert!(out.best.point[0] < 0.0);
        assert!(grid_refine(&axes, &small(), |_| None).is_err());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let axes = [Axis::new("x", 0.0, 6.0), Axis::new("y", 0.0, 6.0)];
        let f = |p: &[f64]| Some((p[0].sin() * p[1].cos()).abs().min(0.9));
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| grid_refine(&axes, &small(), f).unwrap());
        let b = four.install(|| grid_refine(&axes, &small(), f).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_oversized_grid() {
        let axes = vec![Axis::new("x", 0.0, 1.0); 5];
        let config = ScanConfig {
            grid: 64,
            ..ScanConfig::default()
        };
        assert!(matches!(
            grid_refine(&axes, &config, |_| Some(0.0)),
            Err(Error::ResourceBound(_))
        ));
    }
}
