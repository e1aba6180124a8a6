//! Corkscrew points: `M⁻¹ r < |A - Q| < r` and `dist(A, ∂Ω) > M⁻¹ r` for
//! an interior point `A⁺` and an exterior point `A⁻`.

use serde::{Deserialize, Serialize};

use super::Domain;
use crate::error::{Error, Result};
use crate::geom::{unit2, Point};
use crate::measure::hyperplane_grid;

const RAYS: usize = 64;
const LEVELS: i32 = 10;
const CAP: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corkscrew {
    pub a_plus: Point,
    pub a_minus: Point,
    pub m_plus: f64,
    pub m_minus: f64,
    /// `max(m_plus, m_minus)`, the constant realized at this scale.
    pub m_achieved: f64,
}

fn directions(dim: usize) -> Vec<Point> {
    if dim == 2 {
        (0..RAYS)
            .map(|k| unit2(std::f64::consts::TAU * k as f64 / RAYS as f64))
            .collect()
    } else {
        // both hemispheres of the hyperplane-normal grid
        let half = hyperplane_grid(3, RAYS / 2);
        half.iter().flat_map(|u| [*u, -*u]).collect()
    }
}

/// Best point of `side` over rays from `q` and radii `r / 2^m`, `m = 1..=10`.
fn best_on_side(side: &Domain, q: &Point, r: f64) -> (Point, f64) {
    let mut best = (*q, f64::INFINITY);
    for u in directions(side.dim()) {
        for m in 1..=LEVELS {
            let t = r * 0.5f64.powi(m);
            let a = *q + u * t;
            if !side.contains(&a) {
                continue;
            }
            let d = side.boundary_distance(&a);
            let m_val = r / t.min(d);
            if m_val < best.1 {
                best = (a, m_val);
            }
        }
    }
    best
}

/// Searches interior and exterior corkscrew points for `Q ∈ ∂Ω` at scale `r`.
pub fn corkscrew(domain: &Domain, q: &Point, r: f64) -> Result<Corkscrew> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("corkscrew radius {r}")));
    }
    let off = domain.boundary_distance(q);
    if off > 1e-6 * domain.scale().max(r) {
        return Err(Error::InvalidArgument(format!(
            "corkscrew base point is {off} away from the boundary"
        )));
    }
    let (a_plus, m_plus) = best_on_side(domain, q, r);
    let (a_minus, m_minus) = best_on_side(&domain.complement(), q, r);
    let m_achieved = m_plus.max(m_minus);
    if m_achieved > CAP {
        return Err(Error::CorkscrewFailure {
            cap: CAP,
            best: m_achieved,
        });
    }
    Ok(Corkscrew {
        a_plus,
        a_minus,
        m_plus,
        m_minus,
        m_achieved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainSpec, Side};

    #[test]
    fn half_plane_symmetric() {
        let d = make_domain(&DomainSpec::HalfSpace {
            normal: vec![0.0, 1.0],
            offset: 0.0,
            side: Side::Interior,
        })
        .unwrap();
        let c = corkscrew(&d, &Point::ZERO, 1.0).unwrap();
        assert!(c.a_plus.dist(&Point::new2(0.0, 0.5)) < 1e-15);
        assert!(c.a_minus.dist(&Point::new2(0.0, -0.5)) < 1e-15);
        assert!(c.m_achieved <= 2.0);
    }

    #[test]
    fn disc_interior_point() {
        let d = make_domain(&DomainSpec::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
            side: Side::Interior,
        })
        .unwrap();
        let c = corkscrew(&d, &Point::new2(1.0, 0.0), 0.5).unwrap();
        assert!(c.a_plus.dist(&Point::new2(0.75, 0.0)) < 1e-12);
        assert!(c.m_plus <= 2.0 + 1e-12);
    }

    #[test]
    fn cusp_fails() {
        // a needle-thin wedge leaves no interior room at M <= 100
        let d = make_domain(&DomainSpec::Wedge {
            apex: [0.0, 0.0],
            direction: 0.0,
            opening: 1e-3,
            side: Side::Interior,
        })
        .unwrap();
        let r = corkscrew(&d, &Point::ZERO, 1.0);
        assert!(matches!(r, Err(Error::CorkscrewFailure { .. })), "{r:?}");
    }

    #[test]
    fn off_boundary_rejected() {
        let d = make_domain(&DomainSpec::Ball {
            center: vec![0.0, 0.0, 0.0],
            radius: 1.0,
            side: Side::Interior,
        })
        .unwrap();
        assert!(corkscrew(&d, &Point::ZERO, 0.5).is_err());
        let c = corkscrew(&d, &Point::new3(0.0, 0.0, 1.0), 0.5).unwrap();
        assert!(c.m_achieved <= 2.5, "{c:?}");
    }
}
