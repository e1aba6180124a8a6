//! Flat measures `c H^{n-1}⌞V` and the distance to the cone they form.

use serde::{Deserialize, Serialize};

use super::grassmann::{minimize_two_stage, OrientationSearch};
use super::{f_dist, Ball, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geom::{orthonormal_frame, unit_ball_volume, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatMeasureSpec {
    pub dim: usize,
    /// Unit normal of the hyperplane `V`.
    pub normal: Point,
    pub density: f64,
}

impl FlatMeasureSpec {
    pub fn new(dim: usize, normal: Point, density: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension {dim}")));
        }
        if (normal.norm() - 1.0).abs() > 1e-12 || (dim == 2 && normal.z() != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "normal {normal:?} is not a unit vector of R^{dim}"
            )));
        }
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidArgument(format!("density {density}")));
        }
        Ok(FlatMeasureSpec {
            dim,
            normal,
            density,
        })
    }
}

/// `F_s(c H^{n-1}⌞V) = c v_{n-1} s^n / n`.
pub fn flat_f_norm_closed_form(dim: usize, density: f64, s: f64) -> f64 {
    density * unit_ball_volume(dim - 1) * s.powi(dim as i32) / dim as f64
}

/// The density `c` with `F_s(c H^{n-1}⌞V) = 1`.
pub fn normalized_flat_density(dim: usize, s: f64) -> f64 {
    1.0 / flat_f_norm_closed_form(dim, 1.0, s)
}

/// Deterministic discretization of `c H^{n-1}⌞(V ∩ B(0, s))`: cell midpoints
/// on a segment in the plane, a sunflower lattice on a disc in space. Every
/// atom carries the same weight and the total mass is exact.
pub fn flat_sample(spec: &FlatMeasureSpec, s: f64, n_points: usize) -> Result<DiscreteMeasure> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {s}")));
    }
    let n = n_points as f64;
    let mass = spec.density * unit_ball_volume(spec.dim - 1) * s.powi(spec.dim as i32 - 1);
    let points: Vec<Point> = if spec.dim == 2 {
        let t = spec.normal.perp();
        (0..n_points)
            .map(|k| t * (s * (-1.0 + (2.0 * k as f64 + 1.0) / n)))
            .collect()
    } else {
        let (t1, t2) = orthonormal_frame(&spec.normal);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n_points)
            .map(|k| {
                let rho = s * ((k as f64 + 0.5) / n).sqrt();
                let (sn, cs) = (golden * k as f64).sin_cos();
                t1 * (rho * cs) + t2 * (rho * sn)
            })
            .collect()
    };
    DiscreteMeasure::new(spec.dim, points, vec![mass / n; n_points])
}

/// Discretization and search parameters for [`dist_to_flat_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSearch {
    /// Atom budget (per measure) while scanning the orientation grid.
    pub coarse_atoms: usize,
    /// Atom budget during refinement and for the reported value.
    pub fine_atoms: usize,
    /// Orientation grid; `None` picks the dimension default.
    pub orientation: Option<OrientationSearch>,
}

impl Default for FlatSearch {
    fn default() -> Self {
        FlatSearch {
            coarse_atoms: 48,
            fine_atoms: 160,
            orientation: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatFit {
    /// Best value found, in `[0, 1]`.
    pub distance: f64,
    /// Normal of the best hyperplane; `None` when `F_s(mu) = 0`.
    pub normal: Option<Point>,
    /// Discretization error bound on `distance` at the reported normal.
    pub tolerance: f64,
    /// Orientation grid spacing in radians.
    pub grid_step: f64,
    /// Lattice cell size used to coarsen `mu` for the reported value.
    pub quantization_eps: f64,
    pub evaluations: usize,
}

/// `d_s(mu, F)` with default search parameters.
pub fn dist_to_flat(mu: &DiscreteMeasure, s: f64) -> f64 {
    dist_to_flat_with(mu, s, &FlatSearch::default()).distance
}

/// `d_s(mu, F) = inf_V F_s(mu / F_s(mu), Psi_V)` where `Psi_V` is the flat
/// measure on `V` with `F_s(Psi_V) = 1`; equals 1 when `F_s(mu) = 0`.
///
/// Computed at unit scale via `d_s(mu) = d_1(T_{0,s} mu)`. The measure is
/// coarsened onto a lattice to fit the atom budget; the tolerance covers that
/// and the discretization of `Psi_V`.
pub fn dist_to_flat_with(mu: &DiscreteMeasure, s: f64, search: &FlatSearch) -> FlatFit {
    assert!(s > 0.0, "radius must be positive");
    let dim = mu.dim();
    let orientation = search.orientation.unwrap_or_else(|| OrientationSearch::for_dim(dim));
    let norm = mu.f_norm(s);
    if norm <= 0.0 {
        return FlatFit {
            distance: 1.0,
            normal: None,
            tolerance: 0.0,
            grid_step: orientation.grid_step(dim),
            quantization_eps: 0.0,
            evaluations: 0,
        };
    }
    let inside = Ball::new(Point::ZERO, s).expect("positive radius");
    let unit = mu
        .restrict(&inside)
        .rescale(&Point::ZERO, s)
        .expect("positive radius")
        .scaled(s / norm);
    // atoms on the unit sphere carry no F_1 weight
    let unit = unit.restrict(&Ball {
        center: Point::ZERO,
        radius: 1.0 - f64::EPSILON,
    });

    let budget = |atoms: usize| -> (DiscreteMeasure, f64) {
        let eps0 = if dim == 2 {
            1.0 / atoms as f64
        } else {
            1.0 / (atoms as f64).sqrt()
        };
        unit.quantize_to_budget(eps0, atoms).expect("eps0 > 0")
    };
    let (coarse_mu, coarse_eps) = budget(search.coarse_atoms);
    let (fine_mu, fine_eps) = budget(search.fine_atoms);
    let density = normalized_flat_density(dim, 1.0);
    let dense = if dim == 2 { 4096 } else { 16384 };
    // The reference goes through the same lattice as mu, so a measure that
    // is itself flat coarsens to nearly the same atoms.
    let reference = |normal: &Point, eps: f64| -> DiscreteMeasure {
        let spec = FlatMeasureSpec {
            dim,
            normal: *normal,
            density,
        };
        let psi = flat_sample(&spec, 1.0, dense).expect("valid flat spec");
        let psi = psi.scaled(1.0 / psi.f_norm(1.0));
        if eps > 0.0 {
            psi.quantize(eps).expect("eps > 0")
        } else {
            psi
        }
    };
    let ref_eps = |eps: f64, atoms: usize| {
        if eps > 0.0 {
            eps
        } else if dim == 2 {
            2.0 / atoms as f64
        } else {
            2.0 / (atoms as f64).sqrt()
        }
    };
    let (ce, fe) = (
        ref_eps(coarse_eps, search.coarse_atoms),
        ref_eps(fine_eps, search.fine_atoms),
    );
    let coarse = |n: &Point| f_dist(&coarse_mu, &reference(n, ce), 1.0);
    let fine = |n: &Point| f_dist(&fine_mu, &reference(n, fe), 1.0);
    let best = minimize_two_stage(dim, &orientation, coarse, fine);

    // every atom of either side moved by at most the cell diameter
    let psi_mass = reference(&best.normal, 0.0).mass();
    let tolerance = fine_eps * unit.mass() + fe * psi_mass;
    FlatFit {
        distance: best.value.min(1.0),
        normal: Some(best.normal),
        tolerance,
        grid_step: best.grid_step,
        quantization_eps: fe,
        evaluations: best.evaluations,
    }
}
