//! Closed-form Poisson kernels and Green functions for balls and half-spaces.

use std::f64::consts::{PI, TAU};

use crate::domain::{Domain, Side};
use crate::error::{Error, Result};
use crate::geom::{orthonormal_frame, unit2, Point};
use crate::harmonic::contour::clip_segment;
use crate::harmonic::wos::Cell;
use crate::measure::Ball;
use crate::quad::integrate_with_breaks;

/// `Φ_2(x) = -log|x| / 2π`, `Φ_3(x) = 1 / (4π|x|)`.
pub fn fundamental_solution(dim: usize, x: &Point) -> f64 {
    let r = x.norm();
    if dim == 2 {
        -r.ln() / TAU
    } else {
        1.0 / (4.0 * PI * r)
    }
}

fn sphere_area(dim: usize) -> f64 {
    if dim == 2 {
        TAU
    } else {
        4.0 * PI
    }
}

enum Model {
    Ball { center: Point, radius: f64 },
    HalfSpace { normal: Point, offset: f64 },
    /// Planar sector of opening `alpha` whose first ray points along `start`.
    Wedge { apex: Point, start: f64, alpha: f64 },
}

fn model_of(domain: &Domain) -> Result<Model> {
    use crate::domain::DomainSpec as S;
    match domain.spec() {
        S::Ball { center, radius, .. } => Ok(Model::Ball {
            center: Point::from_slice(center),
            radius: *radius,
        }),
        S::HalfSpace { normal, offset, .. } => {
            let n = Point::from_slice(normal).normalized().expect("validated normal");
            // the exterior side is the half-space with flipped normal
            let (normal, offset) = match domain.side() {
                Side::Interior => (n, *offset),
                Side::Exterior => (-n, -offset),
            };
            Ok(Model::HalfSpace { normal, offset })
        }
        S::Wedge {
            apex,
            direction,
            opening,
            ..
        } => {
            let (dir, alpha) = match domain.side() {
                Side::Interior => (*direction, *opening),
                Side::Exterior => (direction + PI, TAU - opening),
            };
            Ok(Model::Wedge {
                apex: Point::new2(apex[0], apex[1]),
                start: dir - 0.5 * alpha,
                alpha,
            })
        }
        _ => Err(Error::NotAnOracle(domain.kind().to_string())),
    }
}

/// `(e^{-i start}(z - apex))^{π/α}`, sending the wedge onto the upper half-plane.
fn wedge_map(apex: &Point, start: f64, alpha: f64, z: &Point) -> (f64, f64) {
    let v = *z - *apex;
    let phi = (v.angle() - start).rem_euclid(TAU);
    let beta = PI / alpha;
    let m = v.norm().powf(beta);
    let (s, c) = (beta * phi).sin_cos();
    (m * c, m * s)
}

/// Poisson kernel density of `ω^X` against surface measure at `ξ`.
fn kernel(model: &Model, dim: usize, x: &Point, xi: &Point) -> f64 {
    let dn = x.dist(xi).powi(dim as i32);
    match model {
        Model::Ball { center, radius } => {
            (radius * radius - x.dist(center).powi(2)).abs() / (sphere_area(dim) * radius * dn)
        }
        Model::HalfSpace { normal, offset } => {
            2.0 * (x.dot(normal) - offset).abs() / (sphere_area(dim) * dn)
        }
        Model::Wedge { apex, start, alpha } => {
            let (a, b) = wedge_map(apex, *start, *alpha, x);
            let v = *xi - *apex;
            let t = v.norm();
            let beta = PI / alpha;
            // second ray maps to the negative axis
            let on_first = (v.angle() - start).rem_euclid(TAU).min(TAU - (v.angle() - start).rem_euclid(TAU))
                < ((v.angle() - start - alpha).rem_euclid(TAU)).min(TAU - (v.angle() - start - alpha).rem_euclid(TAU));
            let s = if on_first { t.powf(beta) } else { -t.powf(beta) };
            b / (PI * ((s - a).powi(2) + b * b)) * beta * t.powf(beta - 1.0)
        }
    }
}

/// Density of `ω^{pole}` against arc length (surface area) at the boundary
/// point `ξ`, for balls, half-spaces and planar wedges.
pub fn poisson_density(domain: &Domain, pole: &Point, xi: &Point) -> Result<f64> {
    let model = model_of(domain)?;
    if !domain.contains(pole) {
        return Err(Error::InvalidPole);
    }
    Ok(kernel(&model, domain.dim(), pole, xi))
}

const TOL: f64 = 1e-12;
const PANELS: usize = 4000;

/// Exact `ω^{pole}(cell)` on balls and half-spaces of either side, by adaptive
/// quadrature of the Poisson kernel over `∂Ω ∩ cell`.
pub fn kernel_oracle(domain: &Domain, pole: &Point, cell: &Cell) -> Result<f64> {
    let model = model_of(domain)?;
    if !domain.contains(pole) {
        return Err(Error::InvalidPole);
    }
    let dim = domain.dim();
    let k = |xi: &Point| kernel(&model, dim, pole, xi);
    match (&model, dim, cell) {
        (Model::Ball { center, radius }, 2, _) => {
            let (a0, a1) = match cell {
                Cell::Ball { center: bc, radius: br } => {
                    match crate::domain::circle_in_ball(center, *radius, &Ball::new(*bc, *br)?) {
                        Some(iv) => iv,
                        None => return Ok(0.0),
                    }
                }
                Cell::Arc {
                    center: ac,
                    start,
                    end,
                    ..
                } => {
                    if ac.dist(center) > 1e-12 * radius {
                        return Err(Error::InvalidArgument("arc cell must share the circle center".into()));
                    }
                    (*start, *end)
                }
            };
            let peak = (*pole - *center).angle();
            let breaks: Vec<f64> = (-2..=2).map(|j| peak + TAU * j as f64).collect();
            let r = integrate_with_breaks(|t| k(&(*center + unit2(t) * *radius)) * radius, a0, a1, &breaks, TOL, TOL, PANELS);
            Ok(r.value)
        }
        (Model::HalfSpace { normal, offset }, 2, Cell::Ball { center: bc, radius: br }) => {
            let p0 = *normal * *offset;
            let t = normal.perp();
            let s = (*bc - p0).dot(&t);
            let reach = br + 1.0;
            let Some((a, b)) = clip_segment(&(p0 + t * (s - reach)), &(p0 + t * (s + reach)), &Ball::new(*bc, *br)?) else {
                return Ok(0.0);
            };
            // (1/π)(arctan((s1 - sp)/h) - arctan((s0 - sp)/h))
            let h = (pole.dot(normal) - offset).abs();
            let sp = (*pole - p0).dot(&t);
            let (s0, s1) = ((a - p0).dot(&t), (b - p0).dot(&t));
            Ok((((s1 - sp) / h).atan() - ((s0 - sp) / h).atan()).abs() / PI)
        }
        (Model::Ball { center, radius }, 3, Cell::Ball { center: bc, radius: br }) => {
            let d = center.dist(bc);
            let (axis, cos_max) = if d + radius <= *br {
                (Point::axis(2), -1.0)
            } else if d >= radius + br || d + br <= *radius || d == 0.0 {
                return Ok(0.0);
            } else {
                let kappa = (d * d + radius * radius - br * br) / (2.0 * radius * d);
                ((*bc - *center) / d, kappa.clamp(-1.0, 1.0))
            };
            let (e1, e2) = orthonormal_frame(&axis);
            let pv = *pole - *center;
            let peak_theta = pv.normalized().map_or(0.0, |u| u.dot(&axis).clamp(-1.0, 1.0).acos());
            let peak_phi = pv.dot(&e2).atan2(pv.dot(&e1));
            let theta_max = cos_max.acos();
            let outer = |theta: f64| {
                let (st, ct) = theta.sin_cos();
                let inner = integrate_with_breaks(
                    |phi| {
                        let (sp, cp) = phi.sin_cos();
                        let xi = *center + (axis * ct + e1 * (st * cp) + e2 * (st * sp)) * *radius;
                        k(&xi)
                    },
                    peak_phi - PI,
                    peak_phi + PI,
                    &[peak_phi],
                    TOL,
                    TOL,
                    PANELS,
                );
                inner.value * radius * radius * st
            };
            Ok(integrate_with_breaks(outer, 0.0, theta_max, &[peak_theta], TOL, 1e-11, PANELS).value)
        }
        (Model::HalfSpace { normal, offset }, 3, Cell::Ball { center: bc, radius: br }) => {
            let delta = bc.dot(normal) - offset;
            if delta.abs() >= *br {
                return Ok(0.0);
            }
            let foot = *bc - *normal * delta;
            let rad = (br * br - delta * delta).sqrt();
            let (e1, e2) = orthonormal_frame(normal);
            let pv = *pole - foot;
            let (px, py) = (pv.dot(&e1), pv.dot(&e2));
            let peak_r = px.hypot(py);
            let peak_phi = py.atan2(px);
            let outer = |r: f64| {
                let inner = integrate_with_breaks(
                    |phi| k(&(foot + (e1 * phi.cos() + e2 * phi.sin()) * r)),
                    peak_phi - PI,
                    peak_phi + PI,
                    &[peak_phi],
                    TOL,
                    TOL,
                    PANELS,
                );
                inner.value * r
            };
            Ok(integrate_with_breaks(outer, 0.0, rad, &[peak_r], TOL, 1e-11, PANELS).value)
        }
        (Model::Wedge { apex, start, alpha }, 2, Cell::Ball { center: bc, radius: br }) => {
            let (a, b) = wedge_map(apex, *start, *alpha, pole);
            let beta = PI / alpha;
            let ball = Ball::new(*bc, *br)?;
            let reach = apex.dist(bc) + br + 1.0;
            let mut total = 0.0;
            for (angle, sign) in [(*start, 1.0), (start + alpha, -1.0)] {
                let u = unit2(angle);
                if let Some((p, q)) = clip_segment(apex, &(*apex + u * reach), &ball) {
                    let (t0, t1) = (p.dist(apex), q.dist(apex));
                    let (s0, s1) = (sign * t0.powf(beta), sign * t1.powf(beta));
                    total += (((s1 - a) / b).atan() - ((s0 - a) / b).atan()).abs() / PI;
                }
            }
            Ok(total)
        }
        _ => Err(Error::InvalidArgument(format!(
            "cell kind `{}` is not supported on this model",
            cell.kind()
        ))),
    }
}

/// Closed-form Green function `G(X, Y)` of balls (either side) and half-spaces,
/// normalized like [`fundamental_solution`]; the planar exterior disc uses
/// the solution bounded at infinity.
pub fn green_closed_form(domain: &Domain, y: &Point, x: &Point) -> Result<f64> {
    let model = model_of(domain)?;
    if !domain.contains(y) || !domain.contains(x) {
        return Err(Error::InvalidPole);
    }
    let dim = domain.dim();
    let phi = |v: &Point| fundamental_solution(dim, v);
    Ok(match model {
        Model::Wedge { .. } => return Err(Error::NotAnOracle("wedge".into())),
        Model::Ball { center, radius } => {
            let v = *y - center;
            let rho = v.norm();
            let base = if rho == 0.0 {
                // image charge at infinity
                phi(&(*x - *y)) - phi(&(Point::axis(0) * radius))
            } else {
                let star = center + v * (radius * radius / (rho * rho));
                if dim == 2 {
                    phi(&(*x - *y)) - phi(&((*x - star) * (rho / radius)))
                } else {
                    phi(&(*x - *y)) - (radius / rho) * phi(&(*x - star))
                }
            };
            if dim == 2 && domain.side() == Side::Exterior {
                base + phi(&(*x - center)) - phi(&(Point::axis(0) * radius))
            } else {
                base
            }
        }
        Model::HalfSpace { normal, offset } => {
            let h = y.dot(&normal) - offset;
            let mirror = *y - normal * (2.0 * h);
            phi(&(*x - *y)) - phi(&(*x - mirror))
        }
    })
}

/// `∇Φ(v) = -v / (σ_n |v|^n)`.
fn fundamental_gradient(dim: usize, v: &Point) -> Point {
    *v * (-1.0 / (sphere_area(dim) * v.norm().powi(dim as i32)))
}

/// Gradient in `x` of [`green_closed_form`].
pub fn green_gradient_closed_form(domain: &Domain, y: &Point, x: &Point) -> Result<Point> {
    let model = model_of(domain)?;
    if !domain.contains(y) || !domain.contains(x) {
        return Err(Error::InvalidPole);
    }
    let dim = domain.dim();
    let dphi = |v: &Point| fundamental_gradient(dim, v);
    Ok(match model {
        Model::Wedge { .. } => return Err(Error::NotAnOracle("wedge".into())),
        Model::Ball { center, radius } => {
            let v = *y - center;
            let rho = v.norm();
            let mut g = dphi(&(*x - *y));
            if rho > 0.0 {
                let star = center + v * (radius * radius / (rho * rho));
                let c = if dim == 2 { 1.0 } else { radius / rho };
                g = g - dphi(&(*x - star)) * c;
            }
            if dim == 2 && domain.side() == Side::Exterior {
                g = g + dphi(&(*x - center));
            }
            g
        }
        Model::HalfSpace { normal, offset } => {
            let h = y.dot(&normal) - offset;
            let mirror = *y - normal * (2.0 * h);
            dphi(&(*x - *y)) - dphi(&(*x - mirror))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, DomainSpec};
    use crate::harmonic::wos::equal_arcs;

    fn ball(dim: usize, side: Side) -> Domain {
        make_domain(&DomainSpec::Ball {
            center: vec![0.0; dim],
            radius: 1.0,
            side,
        })
        .unwrap()
    }

    #[test]
    fn disc_arc_is_angle_fraction() {
        let d = ball(2, Side::Interior);
        let cells = equal_arcs(Point::ZERO, 1.0, 16);
        for c in &cells {
            let p = kernel_oracle(&d, &Point::ZERO, c).unwrap();
            assert!((p - 1.0 / 16.0).abs() < 1e-12, "{p}");
        }
        // off-center pole: arcs still sum to one
        let pole = Point::new2(0.9, 0.3);
        let total: f64 = cells.iter().map(|c| kernel_oracle(&d, &pole, c).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn half_plane_arctan() {
        let d = make_domain(&DomainSpec::HalfSpace {
            normal: vec![0.0, 1.0],
            offset: 0.0,
            side: Side::Interior,
        })
        .unwrap();
        let cell = Cell::Ball {
            center: Point::ZERO,
            radius: 1.0,
        };
        let p = kernel_oracle(&d, &Point::new2(0.0, 1.0), &cell).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        let total = crate::quad::integrate(|s| 1.0 / (PI * (s * s + 1.0)), -1e6, 1e6, 1e-12, 1e-12, 4000).value;
        assert!((total - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sphere_cap_solid_angle() {
        let d = ball(3, Side::Interior);
        // cap of polar angle π/3 around the north pole
        let cell = Cell::Ball {
            center: Point::new3(0.0, 0.0, 1.0),
            radius: 1.0,
        };
        let p = kernel_oracle(&d, &Point::ZERO, &cell).unwrap();
        let expect = (1.0 - 0.5) / 2.0;
        assert!((p - expect).abs() < 1e-10, "{p}");
        // off-center pole, whole sphere
        let all = Cell::Ball {
            center: Point::ZERO,
            radius: 2.0,
        };
        let q = kernel_oracle(&d, &Point::new3(0.3, -0.2, 0.5), &all).unwrap();
        assert!((q - 1.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn half_space_disc_in_space() {
        let d = make_domain(&DomainSpec::HalfSpace {
            normal: vec![0.0, 0.0, 1.0],
            offset: 0.0,
            side: Side::Interior,
        })
        .unwrap();
        let cell = Cell::Ball {
            center: Point::ZERO,
            radius: 1.0,
        };
        // disc of radius a seen from height h: 1 - h / sqrt(h² + a²)
        let p = kernel_oracle(&d, &Point::new3(0.0, 0.0, 1.0), &cell).unwrap();
        assert!((p - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-10, "{p}");
    }

    #[test]
    fn green_gradient_matches_differences() {
        let cases = [
            (ball(2, Side::Interior), Point::new2(0.2, 0.3), Point::new2(-0.4, 0.1)),
            (ball(2, Side::Exterior), Point::new2(2.0, 0.3), Point::new2(-1.5, 1.1)),
            (ball(3, Side::Interior), Point::new3(0.2, 0.3, -0.1), Point::new3(-0.4, 0.1, 0.2)),
            (ball(3, Side::Interior), Point::ZERO, Point::new3(-0.4, 0.1, 0.2)),
        ];
        for (d, y, x) in cases {
            let g = green_gradient_closed_form(&d, &y, &x).unwrap();
            let h = 1e-6;
            for i in 0..d.dim() {
                let e = Point::axis(i) * h;
                let fd = (green_closed_form(&d, &y, &(x + e)).unwrap() - green_closed_form(&d, &y, &(x - e)).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "{} {fd} {}", d.kind(), g[i]);
            }
        }
    }

    #[test]
    fn quarter_plane_by_conformal_map() {
        let d = make_domain(&DomainSpec::Wedge {
            apex: [0.0, 0.0],
            direction: PI / 4.0,
            opening: PI / 2.0,
            side: Side::Interior,
        })
        .unwrap();
        let pole = Point::new2(1.0, 1.0) / 2f64.sqrt();
        // z² sends the pole to i and B(0, r) ∩ ∂W to [-r², r²]
        for r in [0.1, 0.5, 2.0] {
            let cell = Cell::Ball { center: Point::ZERO, radius: r };
            let p = kernel_oracle(&d, &pole, &cell).unwrap();
            let expect = 2.0 * (r * r).atan() / PI;
            assert!((p - expect).abs() < 1e-14, "{p} {expect}");
        }
        // density integrates to the oracle along the first ray
        let dens = |t: f64| poisson_density(&d, &pole, &Point::new2(t, 0.0)).unwrap();
        let half = crate::quad::integrate(dens, 0.0, 0.5, 1e-13, 1e-13, 1000).value;
        assert!((half - (0.25f64).atan() / PI).abs() < 1e-10);
        // exterior of the quarter plane: exponent 2/3
        let ext = d.complement();
        let pole = Point::new2(-1.0, -1.0);
        let small = kernel_oracle(&ext, &pole, &Cell::Ball { center: Point::ZERO, radius: 1e-4 }).unwrap();
        let smaller = kernel_oracle(&ext, &pole, &Cell::Ball { center: Point::ZERO, radius: 1e-5 }).unwrap();
        assert!(((small / smaller).log10() - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn not_an_oracle() {
        let d = make_domain(&DomainSpec::KochSnowflake {
            level: 1,
            side_length: 1.0,
            center: [0.0, 0.0],
            side: Side::Interior,
        })
        .unwrap();
        let cell = Cell::Ball {
            center: Point::ZERO,
            radius: 1.0,
        };
        assert!(matches!(
            kernel_oracle(&d, &Point::ZERO, &cell),
            Err(Error::NotAnOracle(_))
        ));
    }

    #[test]
    fn green_closed_forms() {
        let d = ball(2, Side::Interior);
        let g = green_closed_form(&d, &Point::ZERO, &Point::new2(0.5, 0.0)).unwrap();
        assert!((g - 2f64.ln() / TAU).abs() < 1e-15);
        // symmetry and boundary values
        let (a, b) = (Point::new2(0.2, 0.3), Point::new2(-0.4, 0.1));
        let gab = green_closed_form(&d, &a, &b).unwrap();
        let gba = green_closed_form(&d, &b, &a).unwrap();
        assert!((gab - gba).abs() < 1e-14);
        let near = green_closed_form(&d, &a, &Point::new2(0.0, 1.0 - 1e-9)).unwrap();
        assert!(near.abs() < 1e-8);
        let d3 = ball(3, Side::Exterior);
        let (a, b) = (Point::new3(0.0, 0.0, 2.0), Point::new3(1.5, 0.5, 0.0));
        let g1 = green_closed_form(&d3, &a, &b).unwrap();
        let g2 = green_closed_form(&d3, &b, &a).unwrap();
        assert!((g1 - g2).abs() < 1e-14 && g1 > 0.0);
        let de = ball(2, Side::Exterior);
        let on = green_closed_form(&de, &Point::new2(0.0, 3.0), &Point::new2(1.0 + 1e-12, 0.0)).unwrap();
        assert!(on.abs() < 1e-9, "{on}");
    }
}
