//! Local dimension of `ω` from the growth of ball masses, and the surface
//! density `Θ^{n-1}` of a boundary sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::line_fit;
use super::source::MeasureSource;
use crate::domain::BoundarySample;
use crate::error::{Error, Result};
use crate::geom::{unit_ball_volume, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    /// Slope of `log ω(B(Q,r))` against `log r`.
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the fit residuals in `log ω`.
    pub residual: f64,
    pub radii: Vec<f64>,
    /// Radii dropped because their mass was unresolved.
    pub dropped: Vec<f64>,
}

impl DimensionFit {
    pub fn flagged(&self) -> bool {
        !self.dropped.is_empty()
    }
}

/// `n` radii spaced evenly in `log r` from `r_max` down to `r_min`.
pub fn log_radii(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (r_max.ln(), r_min.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Least-squares slope of `log ω(B(q,r))` over `n_radii >= 5` log-spaced radii.
pub fn local_dimension(source: &dyn MeasureSource, q: &Point, r_min: f64, r_max: f64, n_radii: usize) -> Result<DimensionFit> {
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius range [{r_min}, {r_max}]")));
    }
    if n_radii < 5 {
        return Err(Error::InvalidArgument(format!("{n_radii} radii given, at least 5 needed")));
    }
    let mut radii = Vec::new();
    let mut dropped = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut s = Vec::new();
    for r in log_radii(r_min, r_max, n_radii) {
        let m = source.ball_mass(q, r)?;
        if m.resolved() {
            radii.push(r);
            x.push(r.ln());
            y.push(m.mass.ln());
            s.push(m.std_error / m.mass);
        } else {
            dropped.push(r);
        }
    }
    if radii.len() < 3 {
        return Err(Error::TooFewScales(radii.len()));
    }
    let (slope, intercept, _, residual) = line_fit(&x, &y, &s);
    Ok(DimensionFit {
        slope,
        intercept,
        residual,
        radii,
        dropped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionDistribution {
    pub slopes: Vec<f64>,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    /// Points where the fit failed.
    pub failures: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Local-dimension slopes over a set of boundary points, summarized by median
/// and quartiles. An estimate of the dimension of `ω`, not a certified value.
pub fn dimension_distribution(
    source: &dyn MeasureSource,
    points: &[Point],
    r_min: f64,
    r_max: f64,
    n_radii: usize,
) -> Result<DimensionDistribution> {
    let fits: Vec<Result<DimensionFit>> = points
        .par_iter()
        .map(|q| local_dimension(source, q, r_min, r_max, n_radii))
        .collect();
    let mut slopes = Vec::new();
    let mut failures = 0;
    for f in fits {
        match f {
            Ok(f) => slopes.push(f.slope),
            Err(Error::TooFewScales(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if slopes.is_empty() {
        return Err(Error::TooFewScales(0));
    }
    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(DimensionDistribution {
        median: quantile(&sorted, 0.5),
        lower_quartile: quantile(&sorted, 0.25),
        upper_quartile: quantile(&sorted, 0.75),
        slopes,
        failures,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaDensity {
    pub value: f64,
    pub points_in_ball: usize,
    /// Fewer than [`THETA_MIN_POINTS`] sample points fell in the ball.
    pub insufficient: bool,
}

pub const THETA_MIN_POINTS: usize = 20;

/// `H^{n-1}(∂Ω ∩ B(q,r)) / (v_{n-1} r^{n-1})` from the area weights of a sample.
pub fn theta_density(sample: &BoundarySample, q: &Point, r: f64) -> Result<ThetaDensity> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let k = sample.dim - 1;
    let mut area = 0.0;
    let mut count = 0;
    for (p, w) in sample.points.iter().zip(&sample.weights) {
        if p.dist(q) <= r {
            area += w;
            count += 1;
        }
    }
    Ok(ThetaDensity {
        value: area / (unit_ball_volume(k) * r.powi(k as i32)),
        points_in_ball: count,
        insufficient: count < THETA_MIN_POINTS,
    })
}
