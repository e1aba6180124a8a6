//! The measure `ω_h = |∇h| · H^{n-1}⌞{h = 0}` of a harmonic polynomial.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::harmonic::contour::contour;
use crate::harmonic::HarmonicPolynomial;
use crate::measure::{Ball, DiscreteMeasure};

/// `ω_h` restricted to `B(0, s)`, discretized into about `n_points` atoms.
pub fn poly_zero_measure(h: &HarmonicPolynomial, s: f64, n_points: usize) -> Result<DiscreteMeasure> {
    poly_zero_measure_in(h, &Ball::new(Point::ZERO, s)?, n_points)
}

/// `ω_h` restricted to an arbitrary ball. Each atom sits on `{h = 0}` at the
/// midpoint (centroid) of a contour piece and carries `|∇h|` times the piece
/// length (area).
pub fn poly_zero_measure_in(h: &HarmonicPolynomial, region: &Ball, n_points: usize) -> Result<DiscreteMeasure> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be positive".into()));
    }
    let pieces = contour(h, region, n_points);
    let (points, weights): (Vec<Point>, Vec<f64>) = pieces
        .iter()
        .filter(|p| p.grad_norm * p.size > 0.0)
        .map(|p| (p.point, p.grad_norm * p.size))
        .unzip();
    if points.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    DiscreteMeasure::new(h.dim(), points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::harmonic_basis;

    #[test]
    fn linear_is_unit_density() {
        let h = HarmonicPolynomial::linear(2, &Point::new2(1.0, 0.0));
        let m = poly_zero_measure(&h, 1.0, 1000).unwrap();
        assert!((m.mass() - 2.0).abs() < 1e-12, "{}", m.mass());
        assert!(m.points().iter().all(|p| p.x().abs() < 1e-15));
    }

    #[test]
    fn saddle_mass_four_r_squared() {
        let h = HarmonicPolynomial::saddle();
        let m = poly_zero_measure(&h, 1.0, 10_000).unwrap();
        assert!((m.mass() - 4.0).abs() < 0.02, "{}", m.mass());
        for r in [0.25, 0.5, 0.75] {
            let b = Ball::new(Point::ZERO, r).unwrap();
            let local = poly_zero_measure_in(&h, &b, 10_000).unwrap();
            assert!((local.mass() / (4.0 * r * r) - 1.0).abs() < 1e-3, "{r} {}", local.mass());
        }
    }

    #[test]
    fn plane_in_space() {
        let h = HarmonicPolynomial::linear(3, &Point::new3(0.0, 0.0, 1.0));
        let m = poly_zero_measure(&h, 1.0, 20_000).unwrap();
        assert!((m.mass() - std::f64::consts::PI).abs() < 5e-3, "{}", m.mass());
    }

    #[test]
    fn empty_zero_set() {
        let h = HarmonicPolynomial::linear(2, &Point::new2(1.0, 0.0));
        let far = Ball::new(Point::new2(5.0, 0.0), 1.0).unwrap();
        assert!(matches!(poly_zero_measure_in(&h, &far, 100), Err(Error::EmptyMeasure)));
        // a degree-3 zero set in space still resolves
        let h3 = harmonic_basis(3, 3).remove(0);
        assert!(poly_zero_measure(&h3, 1.0, 5000).unwrap().mass() > 0.0);
    }
}
