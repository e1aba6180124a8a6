//! Test domains: membership, distance to the boundary, nearest boundary
//! points, boundary sampling, corkscrew points and beta numbers.

mod beta;
mod corkscrew;
mod polygon;
mod sample;
pub(crate) mod zeroset;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::harmonic::HarmonicPolynomial;

pub use beta::{beta_infty, beta_infty_with, beta_number};
pub use corkscrew::{corkscrew, Corkscrew};
pub use polygon::{koch_snowflake, Polygon};
pub(crate) use sample::circle_in_ball;
pub use sample::{boundary_sample, BoundarySample, SampleMetadata};

/// Which of the two complementary open sets a [`Domain`] denotes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Interior,
    Exterior,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Interior => Side::Exterior,
            Side::Exterior => Side::Interior,
        }
    }
}

fn default_side_length() -> f64 {
    1.0
}

fn default_sign() -> i8 {
    1
}

/// JSON form `{"kind": "...", "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        side: Side,
    },
    /// `{x : x · normal > offset}` for the interior side.
    HalfSpace {
        normal: Vec<f64>,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        side: Side,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        side: Side,
    },
    KochSnowflake {
        level: u32,
        #[serde(default = "default_side_length")]
        side_length: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        side: Side,
    },
    /// Planar sector `{apex + t(cos a, sin a) : t > 0, |a - direction| < opening / 2}`.
    Wedge {
        #[serde(default)]
        apex: [f64; 2],
        direction: f64,
        opening: f64,
        #[serde(default)]
        side: Side,
    },
    /// `{sign * h > 0}`.
    PolyZeroSet {
        polynomial: HarmonicPolynomial,
        #[serde(default = "default_sign")]
        sign: i8,
    },
}

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Ball { center: Point, radius: f64 },
    HalfSpace { normal: Point, offset: f64 },
    Polygon(Polygon),
    Wedge { apex: Point, direction: f64, opening: f64 },
    ZeroSet(HarmonicPolynomial),
}

/// An open set `Ω` in the plane or in space with its boundary geometry.
#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    shape: Shape,
    side: Side,
    scale: f64,
    spec: DomainSpec,
}

fn point_of(v: &[f64], what: &str) -> Result<(usize, Point)> {
    if v.len() != 2 && v.len() != 3 {
        return Err(Error::InvalidGeometry(format!("{what} must have 2 or 3 coordinates")));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidGeometry(format!("{what} is not finite")));
    }
    Ok((v.len(), Point::from_slice(v)))
}

/// Builds a domain from its spec.
pub fn make_domain(spec: &DomainSpec) -> Result<Domain> {
    let (dim, shape, side, scale) = match spec {
        DomainSpec::Ball {
            center,
            radius,
            side,
        } => {
            let (dim, c) = point_of(center, "ball center")?;
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidGeometry(format!("ball radius {radius}")));
            }
            (dim, Shape::Ball { center: c, radius: *radius }, *side, *radius)
        }
        DomainSpec::HalfSpace {
            normal,
            offset,
            side,
        } => {
            let (dim, n) = point_of(normal, "half-space normal")?;
            let n = n
                .normalized()
                .ok_or_else(|| Error::InvalidGeometry("zero half-space normal".into()))?;
            if !offset.is_finite() {
                return Err(Error::InvalidGeometry("half-space offset".into()));
            }
            (dim, Shape::HalfSpace { normal: n, offset: *offset }, *side, 1.0)
        }
        DomainSpec::Polygon { vertices, side } => {
            let poly = Polygon::new(vertices.iter().map(|v| Point::new2(v[0], v[1])).collect())?;
            let scale = poly.diameter_bound();
            (2, Shape::Polygon(poly), *side, scale)
        }
        DomainSpec::KochSnowflake {
            level,
            side_length,
            center,
            side,
        } => {
            let poly = koch_snowflake(*level, *side_length, Point::new2(center[0], center[1]))?;
            (2, Shape::Polygon(poly), *side, *side_length)
        }
        DomainSpec::Wedge {
            apex,
            direction,
            opening,
            side,
        } => {
            if !(*opening > 0.0 && *opening < TAU) || !direction.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "wedge opening {opening} must lie in (0, 2 pi)"
                )));
            }
            let shape = Shape::Wedge {
                apex: Point::new2(apex[0], apex[1]),
                direction: *direction,
                opening: *opening,
            };
            (2, shape, *side, 1.0)
        }
        DomainSpec::PolyZeroSet { polynomial, sign } => {
            if *sign != 1 && *sign != -1 {
                return Err(Error::InvalidGeometry(format!("sign must be +1 or -1, got {sign}")));
            }
            if polynomial.degree() == 0 {
                return Err(Error::InvalidGeometry("constant polynomial has no zero set".into()));
            }
            let h = polynomial.scaled(*sign as f64);
            (polynomial.dim(), Shape::ZeroSet(h), Side::Interior, 1.0)
        }
    };
    Ok(Domain {
        dim,
        shape,
        side,
        scale,
        spec: spec.clone(),
    })
}

/// Wraps an angle to `(-pi, pi]`.
fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

impl Domain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    /// Characteristic length: radius, side length or polygon diameter; 1 for
    /// unbounded shapes.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> &'static str {
        match &self.spec {
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::HalfSpace { .. } => "half_space",
            DomainSpec::Polygon { .. } => "polygon",
            DomainSpec::KochSnowflake { .. } => "koch_snowflake",
            DomainSpec::Wedge { .. } => "wedge",
            DomainSpec::PolyZeroSet { .. } => "poly_zero_set",
        }
    }

    /// The complementary open set sharing the same boundary.
    pub fn complement(&self) -> Domain {
        let mut d = self.clone();
        d.side = self.side.flip();
        d.spec = match &self.spec {
            DomainSpec::Ball { center, radius, side } => DomainSpec::Ball {
                center: center.clone(),
                radius: *radius,
                side: side.flip(),
            },
            DomainSpec::HalfSpace { normal, offset, side } => DomainSpec::HalfSpace {
                normal: normal.clone(),
                offset: *offset,
                side: side.flip(),
            },
            DomainSpec::Polygon { vertices, side } => DomainSpec::Polygon {
                vertices: vertices.clone(),
                side: side.flip(),
            },
            DomainSpec::KochSnowflake {
                level,
                side_length,
                center,
                side,
            } => DomainSpec::KochSnowflake {
                level: *level,
                side_length: *side_length,
                center: *center,
                side: side.flip(),
            },
            DomainSpec::Wedge {
                apex,
                direction,
                opening,
                side,
            } => DomainSpec::Wedge {
                apex: *apex,
                direction: *direction,
                opening: *opening,
                side: side.flip(),
            },
            DomainSpec::PolyZeroSet { polynomial, sign } => {
                d.side = Side::Interior;
                if let Shape::ZeroSet(h) = &self.shape {
                    d.shape = Shape::ZeroSet(h.scaled(-1.0));
                }
                DomainSpec::PolyZeroSet {
                    polynomial: polynomial.clone(),
                    sign: -sign,
                }
            }
        };
        d
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Membership in the open "interior" set of the underlying shape.
    fn in_shape(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => x.dist(center) < *radius,
            Shape::HalfSpace { normal, offset } => x.dot(normal) > *offset,
            Shape::Polygon(p) => p.contains(x),
            Shape::Wedge {
                apex,
                direction,
                opening,
            } => {
                let v = *x - *apex;
                v.norm() > 0.0 && wrap(v.angle() - direction).abs() < 0.5 * opening
            }
            Shape::ZeroSet(h) => h.eval(x) > 0.0,
        }
    }

    /// `X ∈ Ω`; boundary points belong to neither side.
    pub fn contains(&self, x: &Point) -> bool {
        if self.dim == 2 && x.z() != 0.0 {
            return false;
        }
        match self.side {
            Side::Interior => self.in_shape(x),
            Side::Exterior => !self.in_shape(x) && self.boundary_distance(x) > 0.0,
        }
    }

    /// Nearest boundary point and its distance. For zero sets this is a local
    /// projection, so the distance is an upper bound for the true one.
    pub fn nearest_boundary(&self, x: &Point) -> (f64, Point) {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let v = *x - *center;
                let r = v.norm();
                let dir = if r > 0.0 { v / r } else { Point::axis(0) };
                ((r - radius).abs(), *center + dir * *radius)
            }
            Shape::HalfSpace { normal, offset } => {
                let t = x.dot(normal) - offset;
                (t.abs(), *x - *normal * t)
            }
            Shape::Polygon(p) => p.nearest(x),
            Shape::Wedge {
                apex,
                direction,
                opening,
            } => {
                let mut best = (f64::INFINITY, *apex);
                for a in [direction - 0.5 * opening, direction + 0.5 * opening] {
                    let u = crate::geom::unit2(a);
                    let t = (*x - *apex).dot(&u).max(0.0);
                    let c = *apex + u * t;
                    let d = x.dist(&c);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best
            }
            Shape::ZeroSet(h) => {
                let p = zeroset::nearest(h, x, self.scale);
                (x.dist(&p), p)
            }
        }
    }

    /// A radius `ρ ≤ dist(X, ∂Ω)`, exact except for zero sets, where it is a
    /// certified Taylor lower bound.
    pub fn safe_distance(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::ZeroSet(h) => zeroset::safe_radius(h, x),
            _ => self.boundary_distance(x),
        }
    }

    /// `dist(X, ∂Ω)`.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        self.nearest_boundary(x).0
    }

    /// Positive inside, negative outside.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        let d = self.boundary_distance(x);
        if self.contains(x) {
            d
        } else {
            -d
        }
    }

    /// Ball containing the whole boundary, for shapes with bounded boundary.
    pub fn boundary_enclosure(&self) -> Option<(Point, f64)> {
        match &self.shape {
            Shape::Ball { center, radius } => Some((*center, *radius)),
            Shape::Polygon(p) => Some(p.enclosing_ball()),
            _ => None,
        }
    }

    /// `true` when the domain itself is bounded.
    pub fn is_bounded(&self) -> bool {
        self.side == Side::Interior && self.boundary_enclosure().is_some()
    }

    /// A deep interior point suitable as a default pole.
    pub fn default_pole(&self) -> Option<Point> {
        let s = self.scale;
        match (&self.shape, self.side) {
            (Shape::Ball { center, .. }, Side::Interior) => Some(*center),
            (Shape::Ball { center, radius }, Side::Exterior) => {
                Some(*center + Point::axis(self.dim - 1) * (2.0 * radius))
            }
            (Shape::HalfSpace { normal, offset }, side) => {
                let sgn = if side == Side::Interior { 1.0 } else { -1.0 };
                Some(*normal * (offset + sgn * s))
            }
            (Shape::Polygon(p), Side::Interior) => {
                let (c, _) = p.enclosing_ball();
                self.contains(&c).then_some(c)
            }
            (Shape::Polygon(p), Side::Exterior) => {
                let (c, r) = p.enclosing_ball();
                Some(c - Point::axis(1) * (2.0 * r))
            }
            (
                Shape::Wedge {
                    apex,
                    direction,
                    opening: _,
                },
                side,
            ) => {
                let a = if side == Side::Interior { *direction } else { direction + PI };
                Some(*apex + crate::geom::unit2(a))
            }
            (Shape::ZeroSet(_), _) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> Domain {
        make_domain(&DomainSpec::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
            side: Side::Interior,
        })
        .unwrap()
    }

    #[test]
    fn disc_and_half_plane() {
        let d = disc();
        assert!(d.contains(&Point::ZERO));
        assert!(!d.contains(&Point::new2(2.0, 0.0)));
        let ext = d.complement();
        assert!(ext.contains(&Point::new2(2.0, 0.0)));
        assert!(!ext.contains(&Point::new2(1.0, 0.0)));
        let hp = make_domain(&DomainSpec::HalfSpace {
            normal: vec![0.0, 1.0],
            offset: 0.0,
            side: Side::Interior,
        })
        .unwrap();
        assert_eq!(hp.boundary_distance(&Point::new2(0.0, 3.0)), 3.0);
        assert!(hp.contains(&Point::new2(5.0, 0.1)));
        assert!(!hp.contains(&Point::new2(5.0, 0.0)));
    }

    #[test]
    fn json_spec_round_trip() {
        let s = r#"{"kind":"koch_snowflake","params":{"level":3,"side_length":2.0}}"#;
        let spec: DomainSpec = serde_json::from_str(s).unwrap();
        let d = make_domain(&spec).unwrap();
        assert_eq!(d.kind(), "koch_snowflake");
        assert_eq!(d.side(), Side::Interior);
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"kind":"polygon","params":{"vertices":[[0,0],[1,1],[1,0],[0,1]]}}"#;
        let spec: DomainSpec = serde_json::from_str(bad).unwrap();
        assert!(matches!(make_domain(&spec), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn wedge_geometry() {
        let w = make_domain(&DomainSpec::Wedge {
            apex: [0.0, 0.0],
            direction: PI / 4.0,
            opening: PI / 2.0,
            side: Side::Interior,
        })
        .unwrap();
        assert!(w.contains(&Point::new2(1.0, 1.0)));
        assert!(!w.contains(&Point::new2(-1.0, 1.0)));
        assert!((w.boundary_distance(&Point::new2(1.0, 2.0)) - 1.0).abs() < 1e-15);
        assert!((w.boundary_distance(&Point::new2(-1.0, -1.0)) - 2f64.sqrt()).abs() < 1e-15);
        let ext = w.complement();
        assert!(ext.contains(&Point::new2(-1.0, 1.0)));
    }

    #[test]
    fn zero_set_distance() {
        let d = make_domain(&DomainSpec::PolyZeroSet {
            polynomial: HarmonicPolynomial::saddle(),
            sign: 1,
        })
        .unwrap();
        let x = Point::new2(1.0, 0.5);
        assert!(d.contains(&x));
        let expect = 0.5 / 2f64.sqrt();
        assert!((d.boundary_distance(&x) - expect).abs() < 1e-9, "{}", d.boundary_distance(&x));
        assert!(!d.complement().contains(&x));
    }

    #[test]
    fn distance_balls_stay_inside() {
        // contains(X) and dist d imply B(X, d) ⊂ Ω, checked on sampled points
        let specs = vec![
            DomainSpec::Ball { center: vec![0.0, 0.0, 0.0], radius: 1.0, side: Side::Interior },
            DomainSpec::Ball { center: vec![0.0, 0.0], radius: 1.0, side: Side::Exterior },
            DomainSpec::KochSnowflake { level: 3, side_length: 1.0, center: [0.0, 0.0], side: Side::Interior },
            DomainSpec::KochSnowflake { level: 3, side_length: 1.0, center: [0.0, 0.0], side: Side::Exterior },
            DomainSpec::Wedge { apex: [0.0, 0.0], direction: 0.3, opening: 1.0, side: Side::Exterior },
            DomainSpec::PolyZeroSet { polynomial: HarmonicPolynomial::saddle(), sign: -1 },
        ];
        let mut rng = crate::rng::stream(5, crate::rng::Purpose::Experiment, 0);
        use rand::Rng;
        for spec in specs {
            let d = make_domain(&spec).unwrap();
            let mut checked = 0;
            while checked < 50 {
                let mut x = Point::ZERO;
                for i in 0..d.dim() {
                    x[i] = rng.gen::<f64>() * 3.0 - 1.5;
                }
                if !d.contains(&x) {
                    continue;
                }
                let r = d.boundary_distance(&x);
                for _ in 0..40 {
                    let u = crate::rng::unit_direction(&mut rng, d.dim());
                    let y = x + u * (0.999 * r * rng.gen::<f64>());
                    assert!(d.contains(&y), "{spec:?} {x:?} {y:?}");
                }
                checked += 1;
            }
        }
    }
}
