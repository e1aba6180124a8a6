//! Deterministic quasi-uniform samples of `∂Ω ∩ B`.
//!
//! Curves (all planar boundaries) are sampled systematically along total arc
//! length with one seeded phase, so counts per piece follow length. Spheres
//! and planes in space give a single cap or disc, filled with a sunflower
//! pattern. Zero sets go through their piecewise-linear contour, with each
//! point projected back onto `{h = 0}`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::zeroset::project;
use super::{Domain, DomainSpec, Shape};
use crate::error::{Error, Result};
use crate::geom::{orthonormal_frame, unit2, Point};
use crate::harmonic::contour::{contour, Simplex};
use crate::measure::{Ball, DiscreteMeasure};
use crate::rng::{stream, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub kind: String,
    pub spec: DomainSpec,
    pub region: Ball,
    /// Requested number of points; zero-set samples may keep slightly fewer.
    pub count: usize,
    pub seed: u64,
}

/// Points on `∂Ω` with surface-measure weights summing to `σ(∂Ω ∩ region)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub metadata: SampleMetadata,
}

impl BoundarySample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total weight, the surface measure of the sampled region.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The sample as the discrete surface measure `σ` restricted to the region.
    pub fn as_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(self.dim, self.points.clone(), self.weights.clone())
            .expect("sample points and weights are finite")
    }
}

enum Curve {
    Segment(Point, Point),
    Arc { center: Point, radius: f64, a0: f64, a1: f64 },
}

impl Curve {
    fn length(&self) -> f64 {
        match self {
            Curve::Segment(a, b) => a.dist(b),
            Curve::Arc { radius, a0, a1, .. } => radius * (a1 - a0),
        }
    }

    fn at(&self, t: f64) -> Point {
        match self {
            Curve::Segment(a, b) => *a + (*b - *a) * t,
            Curve::Arc { center, radius, a0, a1 } => *center + unit2(a0 + (a1 - a0) * t) * *radius,
        }
    }
}

/// Arc of the circle `|x - c| = R` inside `B(b, ρ)`, as an angular interval
/// (full circle when `a1 - a0 = 2π`).
pub(crate) fn circle_in_ball(c: &Point, r: f64, ball: &Ball) -> Option<(f64, f64)> {
    let d = c.dist(&ball.center);
    let rho = ball.radius;
    if d + r <= rho {
        return Some((0.0, TAU));
    }
    if d >= r + rho || d + rho <= r || d == 0.0 {
        return None;
    }
    let kappa = ((d * d + r * r - rho * rho) / (2.0 * r * d)).clamp(-1.0, 1.0);
    let half = kappa.acos();
    let mid = (ball.center - *c).angle();
    Some((mid - half, mid + half))
}

fn planar_curves(domain: &Domain, region: &Ball) -> Vec<Curve> {
    let clip = |a: Point, b: Point| {
        crate::harmonic::contour::clip_segment(&a, &b, region).map(|(p, q)| Curve::Segment(p, q))
    };
    match domain.shape() {
        Shape::Ball { center, radius } => circle_in_ball(center, *radius, region)
            .map(|(a0, a1)| {
                vec![Curve::Arc {
                    center: *center,
                    radius: *radius,
                    a0,
                    a1,
                }]
            })
            .unwrap_or_default(),
        Shape::HalfSpace { normal, offset } => {
            let p0 = *normal * *offset;
            let t = normal.perp();
            let s = (region.center - p0).dot(&t);
            let reach = region.radius * 1.000_001 + 1.0;
            clip(p0 + t * (s - reach), p0 + t * (s + reach)).into_iter().collect()
        }
        Shape::Polygon(p) => p.edges().filter_map(|(a, b)| clip(a, b)).collect(),
        Shape::Wedge {
            apex,
            direction,
            opening,
        } => {
            let reach = apex.dist(&region.center) + region.radius + 1.0;
            [direction - 0.5 * opening, direction + 0.5 * opening]
                .iter()
                .filter_map(|a| clip(*apex, *apex + unit2(*a) * reach))
                .collect()
        }
        Shape::ZeroSet(_) => unreachable!("zero sets are sampled through their contour"),
    }
}

/// Systematic sampling at arc-length positions `(k + φ) L / n`.
fn sample_curves(curves: &[Curve], n: usize, phase: f64) -> (Vec<Point>, f64) {
    let lengths: Vec<f64> = curves.iter().map(Curve::length).collect();
    let total: f64 = lengths.iter().sum();
    let mut points = Vec::with_capacity(n);
    let mut piece = 0;
    let mut start = 0.0;
    for k in 0..n {
        let s = (k as f64 + phase) / n as f64 * total;
        while piece + 1 < curves.len() && s >= start + lengths[piece] {
            start += lengths[piece];
            piece += 1;
        }
        let t = if lengths[piece] > 0.0 {
            ((s - start) / lengths[piece]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        points.push(curves[piece].at(t));
    }
    (points, total)
}

/// Sunflower points on the unit disc, area-uniform.
fn sunflower(k: usize, n: usize, phase: f64) -> (f64, f64) {
    let golden = PI * (3.0 - 5f64.sqrt());
    let rad = ((k as f64 + phase) / n as f64).sqrt();
    let ang = golden * k as f64 + TAU * phase;
    (rad, ang)
}

fn spatial_pieces(domain: &Domain, region: &Ball, n: usize, phase: f64) -> Option<(Vec<Point>, f64)> {
    match domain.shape() {
        Shape::Ball { center, radius } => {
            let d = center.dist(&region.center);
            let rho = region.radius;
            let (axis, cos_max) = if d + radius <= rho {
                (Point::axis(2), -1.0)
            } else if d >= radius + rho || d + rho <= *radius || d == 0.0 {
                return None;
            } else {
                let kappa = (d * d + radius * radius - rho * rho) / (2.0 * radius * d);
                ((region.center - *center) / d, kappa.clamp(-1.0, 1.0))
            };
            let (e1, e2) = orthonormal_frame(&axis);
            let golden = PI * (3.0 - 5f64.sqrt());
            let points = (0..n)
                .map(|k| {
                    // area-uniform in cos θ over [cos_max, 1]
                    let z = 1.0 - (1.0 - cos_max) * (k as f64 + phase) / n as f64;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let (sn, cs) = (golden * k as f64 + TAU * phase).sin_cos();
                    *center + (axis * z + e1 * (s * cs) + e2 * (s * sn)) * *radius
                })
                .collect();
            let area = TAU * radius * radius * (1.0 - cos_max);
            Some((points, area))
        }
        Shape::HalfSpace { normal, offset } => {
            let delta = region.center.dot(normal) - offset;
            if delta.abs() >= region.radius {
                return None;
            }
            let foot = region.center - *normal * delta;
            let rad = (region.radius * region.radius - delta * delta).sqrt();
            let (e1, e2) = orthonormal_frame(normal);
            let points = (0..n)
                .map(|k| {
                    let (r, a) = sunflower(k, n, phase);
                    foot + (e1 * a.cos() + e2 * a.sin()) * (r * rad)
                })
                .collect();
            Some((points, PI * rad * rad))
        }
        _ => None,
    }
}

fn zero_set_points(
    h: &crate::harmonic::HarmonicPolynomial,
    region: &Ball,
    n: usize,
    phase: f64,
) -> Option<(Vec<Point>, f64)> {
    let pieces = contour(h, region, n.max(256));
    if pieces.is_empty() {
        return None;
    }
    let total: f64 = pieces.iter().map(|p| p.size).sum();
    let scale = region.radius;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut points = Vec::with_capacity(n);
    let mut piece = 0;
    let mut start = 0.0;
    for k in 0..n {
        let s = (k as f64 + phase) / n as f64 * total;
        while piece + 1 < pieces.len() && s >= start + pieces[piece].size {
            start += pieces[piece].size;
            piece += 1;
        }
        let u = ((s - start) / pieces[piece].size).clamp(0.0, 1.0);
        let x = match pieces[piece].simplex {
            Simplex::Segment([a, b]) => a + (b - a) * u,
            Simplex::Triangle([a, b, c]) => {
                // u fills the area fraction, a golden-ratio offset the other axis
                let v = (k as f64 * golden + phase).fract();
                let (mut p, mut q) = (u, v);
                if p + q > 1.0 {
                    p = 1.0 - p;
                    q = 1.0 - q;
                }
                a + (b - a) * p + (c - a) * q
            }
        };
        let p = project(h, &x, scale).unwrap_or(x);
        // subdivided rim triangles still poke slightly out of the ball
        if region.contains(&p) {
            points.push(p);
        }
    }
    Some((points, total))
}

/// Points where a planar boundary crosses the circle `∂region`. Empty in
/// space.
pub(crate) fn rim_points(domain: &Domain, region: &Ball) -> Vec<Point> {
    if domain.dim() != 2 {
        return Vec::new();
    }
    let rho = region.radius;
    if let Shape::ZeroSet(h) = domain.shape() {
        let at = |a: f64| region.center + unit2(a) * rho;
        let k = 2048;
        let mut out = Vec::new();
        for i in 0..k {
            let (mut lo, mut hi) = (TAU * i as f64 / k as f64, TAU * (i + 1) as f64 / k as f64);
            let (vl, vh) = (h.eval(&at(lo)), h.eval(&at(hi)));
            if vl == 0.0 {
                out.push(at(lo));
                continue;
            }
            if vl * vh >= 0.0 {
                continue;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h.eval(&at(mid)) * vl > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(at(0.5 * (lo + hi)));
        }
        return out;
    }
    let mut out = Vec::new();
    for c in planar_curves(domain, region) {
        for p in [c.at(0.0), c.at(1.0)] {
            if (p.dist(&region.center) - rho).abs() <= 1e-12 * rho {
                out.push(p);
            }
        }
    }
    out
}

/// Samples `n_points` points of `∂Ω ∩ region`, deterministic under `seed`.
pub fn boundary_sample(domain: &Domain, region: &Ball, n_points: usize, seed: u64) -> Result<BoundarySample> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be positive".into()));
    }
    let phase: f64 = stream(seed, Purpose::BoundarySample, 0).gen();
    let found = match (domain.shape(), domain.dim()) {
        (Shape::ZeroSet(h), _) => zero_set_points(h, region, n_points, phase),
        (_, 2) => {
            let curves = planar_curves(domain, region);
            let curves: Vec<Curve> = curves.into_iter().filter(|c| c.length() > 0.0).collect();
            (!curves.is_empty()).then(|| sample_curves(&curves, n_points, phase))
        }
        _ => spatial_pieces(domain, region, n_points, phase),
    };
    let (points, total) = found.ok_or(Error::EmptySample)?;
    if total <= 0.0 {
        return Err(Error::EmptySample);
    }
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let w = total / points.len() as f64;
    Ok(BoundarySample {
        dim: domain.dim(),
        weights: vec![w; points.len()],
        points,
        metadata: SampleMetadata {
            kind: domain.kind().to_string(),
            spec: domain.spec().clone(),
            region: *region,
            count: n_points,
            seed,
        },
    })
}
