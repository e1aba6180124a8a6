//! Piecewise-linear reconstruction of `{h = 0}` inside a ball.
//!
//! Planar sets use adaptive marching squares: a coarse grid, refined only in
//! cells the zero set may cross, down to a leaf size chosen from the requested
//! piece count. Spatial sets use marching tetrahedra on a uniform grid. Piece
//! vertices are projected onto the zero set; each piece reports its projected
//! midpoint (or centroid), its length (or area) and `|∇h|` there.

use crate::domain::zeroset::project;
use crate::geom::Point;
use crate::harmonic::HarmonicPolynomial;
use crate::measure::Ball;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Simplex {
    Segment([Point; 2]),
    Triangle([Point; 3]),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ZeroPiece {
    /// Projected vertices of the piece, after clipping.
    pub simplex: Simplex,
    pub point: Point,
    /// Length (plane) or area (space) of the piece.
    pub size: f64,
    pub grad_norm: f64,
}

/// Grid offset, as a fraction of the leaf size, keeping lattice corners off
/// symmetric singular points such as the origin.
const OFFSET: [f64; 3] = [0.123_456_7, 0.234_567_8, 0.345_678_9];

pub(crate) fn contour(h: &HarmonicPolynomial, region: &Ball, target: usize) -> Vec<ZeroPiece> {
    let target = target.max(8);
    if h.dim() == 2 {
        // estimate the length at a coarse resolution, then pick the depth
        let coarse = planar(h, region, 64, 0);
        let length: f64 = coarse.iter().map(|p| p.size).sum();
        if length == 0.0 {
            // nothing at 64 cells; refine once more before giving up
            return planar(h, region, 64, 4);
        }
        let leaf = length / target as f64;
        let base_cell = 2.0 * region.radius / 64.0;
        let depth = (base_cell / leaf).log2().ceil().clamp(0.0, 14.0) as u32;
        planar(h, region, 64, depth)
    } else {
        let n0 = 8;
        let coarse = spatial(h, region, n0);
        let count = coarse.len().max(1);
        let n = ((n0 as f64) * (target as f64 / count as f64).sqrt()).ceil() as usize;
        spatial(h, region, n.clamp(n0, 400))
    }
}

fn planar(h: &HarmonicPolynomial, region: &Ball, base: usize, depth: u32) -> Vec<ZeroPiece> {
    let r = region.radius;
    let leaf = 2.0 * r / (base as f64 * (1u64 << depth) as f64);
    // widen by one leaf so the offset grid still covers the ball
    let cell0 = 2.0 * r / base as f64;
    let origin = Point::new2(
        region.center.x() - r - OFFSET[0] * leaf,
        region.center.y() - r - OFFSET[1] * leaf,
    );
    let n0 = base + 1;
    let mut out = Vec::new();
    let mut stack: Vec<(Point, f64, u32)> = Vec::new();
    for i in 0..n0 {
        for j in 0..n0 {
            let lo = origin + Point::new2(i as f64 * cell0, j as f64 * cell0);
            stack.push((lo, cell0, 0));
        }
    }
    let scale = r;
    while let Some((lo, size, level)) = stack.pop() {
        // skip cells entirely outside the ball
        let c = lo + Point::new2(0.5 * size, 0.5 * size);
        let half_diag = size * std::f64::consts::FRAC_1_SQRT_2;
        if c.dist(&region.center) > r + half_diag {
            continue;
        }
        let corners = [
            lo,
            lo + Point::new2(size, 0.0),
            lo + Point::new2(size, size),
            lo + Point::new2(0.0, size),
        ];
        let v = corners.map(|p| h.eval(&p));
        if level < depth {
            let vc = h.eval(&c);
            let mixed = v.iter().any(|&x| (x > 0.0) != (v[0] > 0.0));
            // a crossing may hide inside a cell whose corners agree
            let g = h.gradient(&c).norm();
            let near = vc.abs() <= 2.0 * half_diag * g + half_diag * half_diag * curvature_bound(h, &c, size);
            if mixed || near {
                let s = 0.5 * size;
                for (dx, dy) in [(0.0, 0.0), (s, 0.0), (0.0, s), (s, s)] {
                    stack.push((lo + Point::new2(dx, dy), s, level + 1));
                }
            }
            continue;
        }
        for (a, b) in march_square(&corners, &v, h) {
            if let Some(piece) = segment_piece(h, &a, &b, region, scale) {
                out.push(piece);
            }
        }
    }
    // deterministic order independent of the stack traversal
    out.sort_by(|p, q| {
        p.point.x().total_cmp(&q.point.x()).then(p.point.y().total_cmp(&q.point.y()))
    });
    out
}

/// Crude bound on second derivatives near `c`, from the spread of the
/// gradient across the cell.
fn curvature_bound(h: &HarmonicPolynomial, c: &Point, size: f64) -> f64 {
    let g0 = h.gradient(c);
    let mut m: f64 = 0.0;
    for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
        let g = h.gradient(&(*c + Point::new2(dx * size, dy * size)));
        m = m.max((g - g0).norm() / size);
    }
    2.0 * m
}

fn crossing(a: &Point, b: &Point, va: f64, vb: f64) -> Point {
    let t = va / (va - vb);
    *a + (*b - *a) * t
}

/// Zero-level segments of one cell; saddles are resolved by the center value.
fn march_square(c: &[Point; 4], v: &[f64; 4], h: &HarmonicPolynomial) -> Vec<(Point, Point)> {
    let pos = v.map(|x| x > 0.0);
    let mut pts: Vec<(usize, Point)> = Vec::new();
    for e in 0..4 {
        let (i, j) = (e, (e + 1) % 4);
        if pos[i] != pos[j] {
            pts.push((e, crossing(&c[i], &c[j], v[i], v[j])));
        }
    }
    match pts.len() {
        2 => vec![(pts[0].1, pts[1].1)],
        4 => {
            let center = (c[0] + c[2]) * 0.5;
            let vc = h.eval(&center);
            // corner 0 region joins the center when they share a sign
            if (vc > 0.0) == pos[0] {
                vec![(pts[0].1, pts[1].1), (pts[2].1, pts[3].1)]
            } else {
                vec![(pts[3].1, pts[0].1), (pts[1].1, pts[2].1)]
            }
        }
        _ => Vec::new(),
    }
}

/// Clips `[a, b]` to the closed ball, or `None` if they miss.
pub(crate) fn clip_segment(a: &Point, b: &Point, ball: &Ball) -> Option<(Point, Point)> {
    let d = *b - *a;
    let f = *a - ball.center;
    let qa = d.norm_sq();
    if qa == 0.0 {
        return ball.contains(a).then_some((*a, *b));
    }
    let qb = 2.0 * f.dot(&d);
    let qc = f.norm_sq() - ball.radius * ball.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t0 = ((-qb - s) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + s) / (2.0 * qa)).min(1.0);
    if t0 >= t1 {
        return None;
    }
    Some((*a + d * t0, *a + d * t1))
}

fn segment_piece(h: &HarmonicPolynomial, a: &Point, b: &Point, region: &Ball, scale: f64) -> Option<ZeroPiece> {
    let pa = project(h, a, scale).unwrap_or(*a);
    let pb = project(h, b, scale).unwrap_or(*b);
    let (ca, cb) = clip_segment(&pa, &pb, region)?;
    let mid = (ca + cb) * 0.5;
    let point = project(h, &mid, scale).unwrap_or(mid);
    let size = ca.dist(&cb);
    if size == 0.0 {
        return None;
    }
    Some(ZeroPiece {
        simplex: Simplex::Segment([ca, cb]),
        point,
        size,
        grad_norm: h.gradient(&point).norm(),
    })
}

fn spatial(h: &HarmonicPolynomial, region: &Ball, n: usize) -> Vec<ZeroPiece> {
    let r = region.radius;
    let cell = 2.0 * r / n as f64;
    let origin = region.center - Point::new3(r, r, r)
        - Point::new3(OFFSET[0] * cell, OFFSET[1] * cell, OFFSET[2] * cell);
    let m = n + 1;
    let idx = |i: usize, j: usize, k: usize| (i * (m + 1) + j) * (m + 1) + k;
    let node = |i: usize, j: usize, k: usize| origin + Point::new3(i as f64, j as f64, k as f64) * cell;
    let mut values = vec![0.0; (m + 1) * (m + 1) * (m + 1)];
    for i in 0..=m {
        for j in 0..=m {
            for k in 0..=m {
                values[idx(i, j, k)] = h.eval(&node(i, j, k));
            }
        }
    }
    // six tetrahedra around the main diagonal of each cube
    const TETS: [[usize; 4]; 6] = [
        [0, 1, 3, 7],
        [0, 3, 2, 7],
        [0, 2, 6, 7],
        [0, 6, 4, 7],
        [0, 4, 5, 7],
        [0, 5, 1, 7],
    ];
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let c = node(i, j, k) + Point::new3(0.5, 0.5, 0.5) * cell;
                if c.dist(&region.center) > r + cell {
                    continue;
                }
                let corner = |b: usize| (i + (b >> 2 & 1), j + (b >> 1 & 1), k + (b & 1));
                let vals: Vec<f64> = (0..8)
                    .map(|b| {
                        let (a, bb, cc) = corner(b);
                        values[idx(a, bb, cc)]
                    })
                    .collect();
                if vals.iter().all(|&v| v > 0.0) || vals.iter().all(|&v| v <= 0.0) {
                    continue;
                }
                let pts: Vec<Point> = (0..8)
                    .map(|b| {
                        let (a, bb, cc) = corner(b);
                        node(a, bb, cc)
                    })
                    .collect();
                for t in TETS {
                    for tri in march_tet(&t.map(|b| pts[b]), &t.map(|b| vals[b])) {
                        triangle_pieces(h, &tri, region, r, &mut out);
                    }
                }
            }
        }
    }
    out
}

fn march_tet(p: &[Point; 4], v: &[f64; 4]) -> Vec<[Point; 3]> {
    let inside: Vec<usize> = (0..4).filter(|&i| v[i] > 0.0).collect();
    let outside: Vec<usize> = (0..4).filter(|&i| v[i] <= 0.0).collect();
    let x = |a: usize, b: usize| crossing(&p[a], &p[b], v[a], v[b]);
    match (inside.len(), outside.len()) {
        (1, 3) | (3, 1) => {
            let (lone, rest) = if inside.len() == 1 {
                (inside[0], outside)
            } else {
                (outside[0], inside)
            };
            vec![[x(lone, rest[0]), x(lone, rest[1]), x(lone, rest[2])]]
        }
        (2, 2) => {
            let (a, b) = (inside[0], inside[1]);
            let (c, d) = (outside[0], outside[1]);
            let q = [x(a, c), x(a, d), x(b, d), x(b, c)];
            vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
        }
        _ => Vec::new(),
    }
}

/// Pieces of a contour triangle inside the ball; triangles crossing the
/// sphere are split four ways a few times and kept by centroid.
fn triangle_pieces(h: &HarmonicPolynomial, tri: &[Point; 3], region: &Ball, scale: f64, out: &mut Vec<ZeroPiece>) {
    let q = tri.map(|p| project(h, &p, scale).unwrap_or(p));
    clip_triangle(h, &q, region, scale, 4, out);
}

fn clip_triangle(h: &HarmonicPolynomial, q: &[Point; 3], region: &Ball, scale: f64, depth: u32, out: &mut Vec<ZeroPiece>) {
    let inside = q.iter().filter(|p| region.contains(p)).count();
    let centroid = (q[0] + q[1] + q[2]) / 3.0;
    if inside == 3 || depth == 0 {
        if inside == 3 || region.contains(&centroid) {
            if let Some(piece) = triangle_piece(h, q, scale) {
                out.push(piece);
            }
        }
        return;
    }
    let span = q[0].dist(&q[1]).max(q[1].dist(&q[2])).max(q[2].dist(&q[0]));
    if inside == 0 && centroid.dist(&region.center) > region.radius + span {
        return;
    }
    let m = [(q[0] + q[1]) * 0.5, (q[1] + q[2]) * 0.5, (q[2] + q[0]) * 0.5];
    for sub in [[q[0], m[0], m[2]], [m[0], q[1], m[1]], [m[2], m[1], q[2]], [m[0], m[1], m[2]]] {
        clip_triangle(h, &sub, region, scale, depth - 1, out);
    }
}

fn triangle_piece(h: &HarmonicPolynomial, q: &[Point; 3], scale: f64) -> Option<ZeroPiece> {
    let centroid = (q[0] + q[1] + q[2]) / 3.0;
    let size = 0.5 * (q[1] - q[0]).cross(&(q[2] - q[0])).norm();
    if size == 0.0 {
        return None;
    }
    let point = project(h, &centroid, scale).unwrap_or(centroid);
    Some(ZeroPiece {
        simplex: Simplex::Triangle(*q),
        point,
        size,
        grad_norm: h.gradient(&point).norm(),
    })
}
