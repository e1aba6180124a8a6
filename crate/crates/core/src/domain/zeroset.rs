//! Projection onto the zero set of a harmonic polynomial.

use crate::geom::Point;
use crate::harmonic::HarmonicPolynomial;

/// Damped Newton toward `{h = 0}` along the gradient, with a bisection
/// fallback along the gradient ray when Newton stalls.
pub(crate) fn project(h: &HarmonicPolynomial, x: &Point, scale: f64) -> Option<Point> {
    let tol = |g: f64| 1e-15 * (1.0 + g * scale);
    let mut p = *x;
    for _ in 0..50 {
        let v = h.eval(&p);
        let g = h.gradient(&p);
        let g2 = g.norm_sq();
        if v.abs() <= tol(g2.sqrt()) {
            return Some(p);
        }
        if g2 == 0.0 {
            break;
        }
        let step = g * (v / g2);
        let mut t = 1.0;
        loop {
            let q = p - step * t;
            if h.eval(&q).abs() < v.abs() {
                p = q;
                break;
            }
            t *= 0.5;
            if t < 1e-8 {
                return bisect_ray(h, x, scale);
            }
        }
    }
    let v = h.eval(&p);
    if v.abs() <= 1e-12 * (1.0 + h.gradient(&p).norm() * scale) {
        return Some(p);
    }
    bisect_ray(h, x, scale)
}

fn bisect_ray(h: &HarmonicPolynomial, x: &Point, scale: f64) -> Option<Point> {
    let v0 = h.eval(x);
    let g = h.gradient(x).normalized()?;
    let dir = if v0 > 0.0 { -g } else { g };
    let mut t = 1e-6 * scale;
    let mut lo = 0.0;
    while t < 1e6 * scale {
        if h.eval(&(*x + dir * t)) * v0 <= 0.0 {
            let mut hi = t;
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if h.eval(&(*x + dir * m)) * v0 > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            return Some(*x + dir * hi);
        }
        lo = t;
        t *= 2.0;
    }
    None
}

/// Locally nearest point of `{h = 0}` to `x`: project, then slide along the
/// tangent toward the foot of `x` and re-project while the distance drops.
/// Returns `x` itself if the zero set cannot be reached.
pub(crate) fn nearest(h: &HarmonicPolynomial, x: &Point, scale: f64) -> Point {
    if h.eval(x) == 0.0 {
        return *x;
    }
    let Some(mut p) = project(h, x, scale) else {
        return *x;
    };
    let mut d = x.dist(&p);
    for _ in 0..60 {
        let Some(n) = h.gradient(&p).normalized() else {
            break;
        };
        let w = *x - p;
        let foot = p + (w - n * w.dot(&n));
        let Some(q) = project(h, &foot, scale) else {
            break;
        };
        let dq = x.dist(&q);
        if dq < d * (1.0 - 1e-15) {
            let gain = d - dq;
            p = q;
            d = dq;
            if gain <= 1e-15 * scale {
                break;
            }
        } else {
            break;
        }
    }
    p
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Radius `ρ` such that `B(x, ρ)` certainly misses `{h = 0}`: the Taylor
/// expansion `h(x + y) = Σ c_β y^β` gives `|h(x+y) - h(x)| ≤ Σ_k M_k ρ^k` with
/// `M_k = Σ_{|β|=k} |c_β|`, and `ρ` solves `Σ_{k≥1} M_k ρ^k = |h(x)|` from below.
pub(crate) fn safe_radius(h: &HarmonicPolynomial, x: &Point) -> f64 {
    let d = h.degree() as usize;
    let side = d + 1;
    let mut coef = vec![0.0; side * side * side];
    for (alpha, c) in h.polynomial().terms() {
        for b0 in 0..=alpha[0] {
            let f0 = c * binomial(alpha[0], b0) * x[0].powi((alpha[0] - b0) as i32);
            for b1 in 0..=alpha[1] {
                let f1 = f0 * binomial(alpha[1], b1) * x[1].powi((alpha[1] - b1) as i32);
                for b2 in 0..=alpha[2] {
                    let f2 = f1 * binomial(alpha[2], b2) * x[2].powi((alpha[2] - b2) as i32);
                    coef[(b0 as usize * side + b1 as usize) * side + b2 as usize] += f2;
                }
            }
        }
    }
    let mut m = vec![0.0; 3 * d + 1];
    for b0 in 0..side {
        for b1 in 0..side {
            for b2 in 0..side {
                m[b0 + b1 + b2] += coef[(b0 * side + b1) * side + b2].abs();
            }
        }
    }
    let v = m[0];
    if v == 0.0 {
        return 0.0;
    }
    let s = |rho: f64| m[1..].iter().rev().fold(0.0, |acc, mk| (acc + mk) * rho);
    // S(ρ) ≥ M_1 ρ, so the root lies below v / M_1 when M_1 > 0
    let mut hi = if m[1] > 0.0 { v / m[1] } else { 1.0 };
    while s(hi) < v {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if s(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
