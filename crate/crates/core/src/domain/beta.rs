//! Beta numbers: one-sided `β(Q, r) = inf_L sup_{y ∈ Σ ∩ B(Q,r)} d(y, L) / r`
//! over hyperplanes `L` through `Q`, and the two-sided `β_∞` that also charges
//! the distance from `L ∩ B(Q, r)` back to the set.

use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen};

use super::sample::{boundary_sample, rim_points, BoundarySample};
use super::Domain;
use crate::error::{Error, Result};
use crate::geom::{orthonormal_frame, Point};
use crate::measure::{minimize_two_stage, Ball, OrientationSearch};

fn search(dim: usize) -> OrientationSearch {
    let mut s = OrientationSearch::for_dim(dim);
    if dim == 2 {
        s.tol = 1e-12;
    }
    s
}

/// Points of the sample inside the closed ball, relative to `q`.
fn local_points(points: &[Point], q: &Point, r: f64, dim: usize) -> Result<Vec<Point>> {
    let local: Vec<Point> = points
        .iter()
        .filter(|p| p.dist(q) <= r * (1.0 + 1e-12))
        .map(|p| *p - *q)
        .collect();
    if local.len() < dim {
        return Err(Error::InsufficientSample {
            needed: dim,
            found: local.len(),
        });
    }
    Ok(local)
}

fn width(local: &[Point], n: &Point) -> f64 {
    local.iter().fold(0.0f64, |m, y| m.max(y.dot(n).abs()))
}

/// Least-variance direction of the points about the origin; exact for
/// points already on a hyperplane through `Q`.
fn principal_normal(local: &[Point], dim: usize) -> Option<Point> {
    let mut m = Matrix3::<f64>::zeros();
    for y in local {
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += y[i] * y[j];
            }
        }
    }
    if dim == 2 {
        let e = SymmetricEigen::new(m.fixed_view::<2, 2>(0, 0).into_owned());
        let v = e.eigenvectors.column(e.eigenvalues.imin());
        return Point::new2(v[0], v[1]).normalized();
    }
    let e = SymmetricEigen::new(m);
    let v = e.eigenvectors.column(e.eigenvalues.imin());
    Point::new3(v[0], v[1], v[2]).normalized()
}

fn one_sided(local: &[Point], dim: usize, r: f64) -> f64 {
    let s = search(dim);
    let found = minimize_two_stage(dim, &s, |n| width(local, n), |n| width(local, n));
    let mut best = found.value;
    if let Some(n) = principal_normal(local, dim) {
        best = best.min(width(local, &n));
    }
    (best / r).clamp(0.0, 1.0)
}

/// One-sided beta number of a boundary sample at `B(q, r)`.
pub fn beta_number(sample: &BoundarySample, q: &Point, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta radius {r}")));
    }
    let local = local_points(&sample.points, q, r, sample.dim)?;
    Ok(one_sided(&local, sample.dim, r))
}

/// Uniform bucket grid for nearest-point queries among sample points.
struct PointGrid<'a> {
    points: &'a [Point],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    reach: i64,
    planar: bool,
}

impl<'a> PointGrid<'a> {
    fn new(points: &'a [Point], extent: f64, cells: f64) -> Self {
        let cell = extent / cells;
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        PointGrid {
            points,
            cell,
            buckets,
            reach: cells.ceil() as i64 * 2 + 2,
            planar: points.iter().all(|p| p.z() == 0.0),
        }
    }

    fn key(p: &Point, cell: f64) -> [i64; 3] {
        [0, 1, 2].map(|i| (p[i] / cell).floor() as i64)
    }

    fn nearest(&self, x: &Point) -> f64 {
        let k0 = Self::key(x, self.cell);
        let mut best = f64::INFINITY;
        for ring in 0..=self.reach {
            // every point in ring `ring + 1` or beyond is at least ring * cell away
            if best <= ring as f64 * self.cell {
                break;
            }
            let zr = if self.planar { 0 } else { ring };
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -zr..=zr {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.buckets.get(&[k0[0] + dx, k0[1] + dy, k0[2] + dz]) {
                            for &i in ids {
                                best = best.min(self.points[i].dist(x));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Points of `L ∩ B(0, r)` for the hyperplane with normal `n`.
fn slice(n: &Point, r: f64, dim: usize) -> Vec<Point> {
    if dim == 2 {
        let t = n.perp();
        let k = 201;
        (0..k)
            .map(|i| t * (r * (2.0 * i as f64 / (k - 1) as f64 - 1.0)))
            .collect()
    } else {
        let (e1, e2) = orthonormal_frame(n);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let inner = 600;
        let rim = 96;
        let mut out: Vec<Point> = (0..inner)
            .map(|k| {
                let rad = r * ((k as f64 + 0.5) / inner as f64).sqrt();
                let (s, c) = (golden * k as f64).sin_cos();
                e1 * (rad * c) + e2 * (rad * s)
            })
            .collect();
        out.extend((0..rim).map(|k| {
            let (s, c) = (std::f64::consts::TAU * k as f64 / rim as f64).sin_cos();
            e1 * (r * c) + e2 * (r * s)
        }));
        out
    }
}

/// Two-sided beta number with the default sample density.
pub fn beta_infty(domain: &Domain, q: &Point, r: f64) -> Result<f64> {
    let n = if domain.dim() == 2 { 4000 } else { 12000 };
    beta_infty_with(domain, q, r, n, 0)
}

/// `β_∞(Q, r) = inf_L D[∂Ω ∩ B(Q,r), L ∩ B(Q,r)] / r` on a boundary sample of
/// `n_points`. The plane-to-set part is resolved to the sample spacing. The
/// result never falls below the one-sided number of the same sample.
pub fn beta_infty_with(domain: &Domain, q: &Point, r: f64, n_points: usize, seed: u64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta radius {r}")));
    }
    let dim = domain.dim();
    let region = Ball::new(*q, r)?;
    let sample = match boundary_sample(domain, &region, n_points, seed) {
        Ok(s) => s,
        Err(Error::EmptySample) => {
            return Err(Error::InsufficientSample {
                needed: dim,
                found: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let mut points = sample.points;
    points.extend(rim_points(domain, &region));
    let local = local_points(&points, q, r, dim)?;
    let grid = PointGrid::new(&local, r, 16.0);
    let two_sided = |n: &Point| {
        let out = width(&local, n);
        let back = slice(n, r, dim)
            .iter()
            .fold(0.0f64, |m, z| m.max(grid.nearest(z)));
        out.max(back)
    };
    let s = search(dim);
    let found = minimize_two_stage(dim, &s, two_sided, two_sided);
    let mut best = found.value;
    if let Some(n) = principal_normal(&local, dim) {
        best = best.min(two_sided(&n));
    }
    let value = (best / r).clamp(0.0, 2.0);
    Ok(value.max(one_sided(&local, dim, r)))
}
