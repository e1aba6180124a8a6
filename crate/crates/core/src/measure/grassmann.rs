//! Minimization over hyperplanes through the origin, parametrized by unit
//! normals: a grid on `[0, pi)` or on the upper hemisphere followed by local
//! refinement around the best grid candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{unit2, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationSearch {
    /// Grid size: angles in the plane, hemisphere points in space.
    pub grid: usize,
    /// Stop refining once the bracket (2D) or simplex (3D) is this small, radians.
    pub tol: f64,
    /// Number of distinct grid minima that get refined.
    pub candidates: usize,
    /// Cap on objective calls per refinement.
    pub max_refine_evals: usize,
}

impl OrientationSearch {
    pub fn for_dim(dim: usize) -> Self {
        OrientationSearch {
            grid: if dim == 2 { 360 } else { 1000 },
            tol: 1e-4,
            candidates: 2,
            max_refine_evals: 80,
        }
    }

    /// Angular spacing of the grid.
    pub fn grid_step(&self, dim: usize) -> f64 {
        use std::f64::consts::{PI, TAU};
        if dim == 2 {
            PI / self.grid as f64
        } else {
            (TAU / self.grid as f64).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneMin {
    pub normal: Point,
    pub value: f64,
    /// Grid spacing in radians; the minimizer is resolved to `tol` only
    /// inside the refined cells.
    pub grid_step: f64,
    pub evaluations: usize,
}

/// Unit normals of the search grid. In the plane: angles `pi k / n`. In
/// space: a Fibonacci lattice on the hemisphere `z > 0`.
pub fn hyperplane_grid(dim: usize, n: usize) -> Vec<Point> {
    use std::f64::consts::PI;
    assert!(n >= 1, "empty orientation grid");
    match dim {
        2 => (0..n).map(|k| unit2(PI * k as f64 / n as f64)).collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (k as f64 + 0.5) / n as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    Point::new3(rho * phi.cos(), rho * phi.sin(), z)
                })
                .collect()
        }
        _ => panic!("hyperplane_grid: dimension {dim} unsupported"),
    }
}

/// Minimizes `f` over hyperplane normals with one objective for both stages.
pub fn minimize_over_hyperplanes<F>(dim: usize, search: &OrientationSearch, f: F) -> HyperplaneMin
where
    F: Fn(&Point) -> f64 + Sync,
{
    minimize_two_stage(dim, search, &f, &f)
}

/// Scans the grid with the cheap `coarse` objective, then refines the best
/// candidates with `fine`. The returned value is always a `fine` evaluation.
pub fn minimize_two_stage<C, F>(dim: usize, search: &OrientationSearch, coarse: C, fine: F) -> HyperplaneMin
where
    C: Fn(&Point) -> f64 + Sync,
    F: Fn(&Point) -> f64,
{
    let grid = hyperplane_grid(dim, search.grid);
    let values: Vec<f64> = grid.par_iter().map(&coarse).collect();
    let step = search.grid_step(dim);
    let picks = pick_candidates(dim, &grid, &values, search.candidates.max(1), step);
    let mut evaluations = grid.len();
    let mut best: Option<(Point, f64)> = None;
    for k in picks {
        let (normal, value, used) = if dim == 2 {
            refine_angle(grid[k].angle(), step, search, &fine)
        } else {
            refine_sphere(&grid[k], step, search, &fine)
        };
        evaluations += used;
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((normal, value));
        }
    }
    let (normal, value) = best.expect("at least one candidate");
    HyperplaneMin {
        normal,
        value,
        grid_step: step,
        evaluations,
    }
}

/// Indices of the lowest grid values that are pairwise more than two grid
/// steps apart (circularly in the plane, antipodally on the sphere).
fn pick_candidates(dim: usize, grid: &[Point], values: &[f64], count: usize, step: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut picks: Vec<usize> = Vec::new();
    let sep = if dim == 2 { 2.5 * step } else { 3.0 * step };
    for k in order {
        if picks.len() == count {
            break;
        }
        let far = picks.iter().all(|&j| {
            let c = grid[k].dot(&grid[j]).abs().min(1.0);
            c.acos() > sep
        });
        if far {
            picks.push(k);
        }
    }
    picks
}

fn refine_angle<F: Fn(&Point) -> f64>(
    theta0: f64,
    step: f64,
    search: &OrientationSearch,
    f: &F,
) -> (Point, f64, usize) {
    let g = |t: f64| f(&unit2(t));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (theta0, g(theta0));
    let mut used = 1;
    let (mut a, mut b) = (theta0 - step, theta0 + step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    used += 2;
    while b - a > search.tol && used < search.max_refine_evals {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
        used += 1;
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (t, v);
        }
    }
    (unit2(best.0), best.1, used)
}

fn spherical(p: &[f64; 2]) -> Point {
    let (st, ct) = p[0].sin_cos();
    let (sp, cp) = p[1].sin_cos();
    Point::new3(st * cp, st * sp, ct)
}

/// Nelder-Mead in polar/azimuth coordinates around `start`.
fn refine_sphere<F: Fn(&Point) -> f64>(
    start: &Point,
    step: f64,
    search: &OrientationSearch,
    f: &F,
) -> (Point, f64, usize) {
    let p0 = [start.z().clamp(-1.0, 1.0).acos(), start.y().atan2(start.x())];
    let g = |p: &[f64; 2]| f(&spherical(p));
    let mut simplex: Vec<([f64; 2], f64)> = [p0, [p0[0] + step, p0[1]], [p0[0], p0[1] + step]]
        .into_iter()
        .map(|p| (p, g(&p)))
        .collect();
    let mut used = 3;
    let lerp = |a: &[f64; 2], b: &[f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while used < search.max_refine_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| (p[0] - simplex[0].0[0]).hypot(p[1] - simplex[0].0[1]))
            .fold(0.0, f64::max);
        if size < search.tol {
            break;
        }
        let centroid = lerp(&simplex[0].0, &simplex[1].0, 0.5);
        let worst = simplex[2];
        let refl = lerp(&worst.0, &centroid, 2.0);
        let fr = g(&refl);
        used += 1;
        if fr < simplex[0].1 {
            let exp = lerp(&worst.0, &centroid, 3.0);
            let fe = g(&exp);
            used += 1;
            simplex[2] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (refl, fr);
        } else {
            let con = lerp(&worst.0, &centroid, if fr < worst.1 { 1.5 } else { 0.5 });
            let fcon = g(&con);
            used += 1;
            if fcon < worst.1.min(fr) {
                simplex[2] = (con, fcon);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&b, &v.0, 0.5);
                    v.1 = g(&v.0);
                }
                used += 2;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (spherical(&simplex[0].0), simplex[0].1, used)
}
