//! Simple polygons with a segment hierarchy for nearest-boundary queries, and
//! the Koch snowflake.

use crate::error::{Error, Result};
use crate::geom::Point;

/// Closest point on segment `[a, b]` to `p`.
pub(crate) fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let d = *b - *a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((*p - *a).dot(&d) / len2).clamp(0.0, 1.0);
    *a + d * t
}

#[derive(Clone, Debug)]
struct Node {
    lo: [f64; 2],
    hi: [f64; 2],
    /// Leaf: range into `order`. Inner: child indices.
    first: usize,
    count: usize,
    left: usize,
    right: usize,
}

impl Node {
    fn box_dist2(&self, p: &Point) -> f64 {
        let mut d2 = 0.0;
        for i in 0..2 {
            let e = (self.lo[i] - p[i]).max(0.0).max(p[i] - self.hi[i]);
            d2 += e * e;
        }
        d2
    }
}

/// Bounding-volume hierarchy over the polygon edges.
#[derive(Clone, Debug)]
struct SegmentTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl SegmentTree {
    fn build(vertices: &[Point]) -> Self {
        let n = vertices.len();
        let mut tree = SegmentTree {
            nodes: Vec::new(),
            order: (0..n).collect(),
        };
        tree.split(vertices, 0, n);
        tree
    }

    fn split(&mut self, v: &[Point], first: usize, count: usize) -> usize {
        let n = v.len();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &e in &self.order[first..first + count] {
            for p in [v[e], v[(e + 1) % n]] {
                for i in 0..2 {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            first,
            count,
            left: usize::MAX,
            right: usize::MAX,
        });
        if count > 4 {
            let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
            let mid = |e: usize| v[e][axis] + v[(e + 1) % n][axis];
            self.order[first..first + count].sort_by(|&a, &b| mid(a).total_cmp(&mid(b)));
            let half = count / 2;
            let l = self.split(v, first, half);
            let r = self.split(v, first + half, count - half);
            self.nodes[id].left = l;
            self.nodes[id].right = r;
        }
        id
    }

    /// Nearest point on the boundary: `(distance, point, edge index)`.
    fn nearest(&self, v: &[Point], p: &Point) -> (f64, Point, usize) {
        let n = v.len();
        let mut best = (f64::INFINITY, Point::ZERO, 0);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.box_dist2(p) >= best.0 * best.0 {
                continue;
            }
            if node.left == usize::MAX {
                for &e in &self.order[node.first..node.first + node.count] {
                    let c = closest_on_segment(p, &v[e], &v[(e + 1) % n]);
                    let d = p.dist(&c);
                    if d < best.0 {
                        best = (d, c, e);
                    }
                }
            } else {
                let (a, b) = (node.left, node.right);
                // visit the nearer child first
                if self.nodes[a].box_dist2(p) <= self.nodes[b].box_dist2(p) {
                    stack.push(b);
                    stack.push(a);
                } else {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        best
    }
}

/// Simple closed polygon, counter-clockwise.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<Point>,
    tree: SegmentTree,
}

fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let orient = |p: &Point, q: &Point, r: &Point| (*q - *p).perp().dot(&(*r - *p));
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, o: f64| {
        o == 0.0
            && r.x() >= p.x().min(q.x())
            && r.x() <= p.x().max(q.x())
            && r.y() >= p.y().min(q.y())
            && r.y() <= p.y().max(q.y())
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

impl Polygon {
    /// Validates and orients a vertex loop (closing edge implied).
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidGeometry(format!("polygon needs 3 vertices, got {n}")));
        }
        if vertices.iter().any(|p| !p.is_finite() || p.z() != 0.0) {
            return Err(Error::InvalidGeometry("polygon vertices must be finite planar points".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidGeometry(format!("repeated vertex at index {i}")));
            }
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_cross(&a, &b, &c, &d) {
                    return Err(Error::InvalidGeometry(format!(
                        "edges {i} and {j} intersect; polygon is not simple"
                    )));
                }
            }
        }
        let poly = Self::from_simple(vertices);
        if poly.signed_area().abs() == 0.0 {
            return Err(Error::InvalidGeometry("polygon has zero area".into()));
        }
        Ok(poly)
    }

    /// Skips the simplicity check; the loop must be simple.
    pub(crate) fn from_simple(mut vertices: Vec<Point>) -> Self {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let tree = SegmentTree::build(&vertices);
        Polygon { vertices, tree }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(&b)).sum()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Even-odd crossing test; boundary points count as outside.
    pub fn contains(&self, p: &Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y() > p.y()) != (b.y() > p.y()) {
                let t = (p.y() - a.y()) / (b.y() - a.y());
                let x = a.x() + t * (b.x() - a.x());
                if p.x() < x {
                    inside = !inside;
                }
            }
        }
        inside && self.nearest(p).0 > 0.0
    }

    /// `(distance, nearest boundary point)`.
    pub fn nearest(&self, p: &Point) -> (f64, Point) {
        let (d, c, _) = self.tree.nearest(&self.vertices, p);
        (d, c)
    }

    /// Center and radius of a ball containing every vertex.
    pub fn enclosing_ball(&self) -> (Point, f64) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for i in 0..2 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        let c = Point::new2(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
        let r = self.vertices.iter().map(|v| v.dist(&c)).fold(0.0, f64::max);
        (c, r)
    }

    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.enclosing_ball().1
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x() * b.y() - b.x() * a.y()
        })
        .sum::<f64>()
}

/// Koch snowflake of the given level built on an equilateral triangle with
/// the given side length, centered at `center`.
pub fn koch_snowflake(level: u32, side: f64, center: Point) -> Result<Polygon> {
    if level > 8 {
        return Err(Error::InvalidGeometry(format!("snowflake level {level} exceeds 8")));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidGeometry(format!("side length {side}")));
    }
    let h = side * 3f64.sqrt() / 2.0;
    // counter-clockwise triangle with centroid at the origin
    let mut v = vec![
        Point::new2(-side / 2.0, -h / 3.0),
        Point::new2(side / 2.0, -h / 3.0),
        Point::new2(0.0, 2.0 * h / 3.0),
    ];
    let (s60, c60) = (std::f64::consts::FRAC_PI_3).sin_cos();
    for _ in 0..level {
        let n = v.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let a = v[i];
            let d = (v[(i + 1) % n] - a) / 3.0;
            // outward is to the right of a counter-clockwise edge
            let bump = Point::new2(c60 * d.x() + s60 * d.y(), -s60 * d.x() + c60 * d.y());
            next.push(a);
            next.push(a + d);
            next.push(a + d + bump);
            next.push(a + d * 2.0);
        }
        v = next;
    }
    Ok(Polygon::from_simple(v.into_iter().map(|p| p + center).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::new(vec![
            Point::new2(0.0, 0.0),
            Point::new2(1.0, 0.0),
            Point::new2(1.0, 1.0),
            Point::new2(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_queries() {
        let s = square();
        assert!(s.contains(&Point::new2(0.5, 0.5)));
        assert!(!s.contains(&Point::new2(1.5, 0.5)));
        assert!(!s.contains(&Point::new2(1.0, 0.5)));
        let (d, c) = s.nearest(&Point::new2(0.5, 0.2));
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(c, Point::new2(0.5, 0.0));
        assert!((s.perimeter() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn bowtie_rejected() {
        let r = Polygon::new(vec![
            Point::new2(0.0, 0.0),
            Point::new2(1.0, 1.0),
            Point::new2(1.0, 0.0),
            Point::new2(0.0, 1.0),
        ]);
        assert!(matches!(r, Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon::new(vec![
            Point::new2(0.0, 0.0),
            Point::new2(0.0, 1.0),
            Point::new2(1.0, 1.0),
            Point::new2(1.0, 0.0),
        ])
        .unwrap();
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn koch_perimeter_and_outward_bumps() {
        for level in 0..=5 {
            let k = koch_snowflake(level, 1.0, Point::ZERO).unwrap();
            let expect = 3.0 * (4.0f64 / 3.0).powi(level as i32);
            assert!((k.perimeter() - expect).abs() < 1e-12 * expect);
            assert_eq!(k.vertices().len(), 3 * 4usize.pow(level));
        }
        // area grows with level: the bumps point outward
        let a0 = koch_snowflake(0, 1.0, Point::ZERO).unwrap().signed_area();
        let a1 = koch_snowflake(1, 1.0, Point::ZERO).unwrap().signed_area();
        assert!((a1 / a0 - 4.0 / 3.0).abs() < 1e-12);
        assert!(koch_snowflake(9, 1.0, Point::ZERO).is_err());
    }

    #[test]
    fn tree_matches_brute_force() {
        let k = koch_snowflake(4, 2.0, Point::new2(0.3, 0.1)).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.731;
            let p = Point::new2(1.5 * t.cos() * (i as f64 / 200.0), 1.5 * t.sin());
            let (d, _) = k.nearest(&p);
            let brute = k
                .edges()
                .map(|(a, b)| p.dist(&closest_on_segment(&p, &a, &b)))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
        }
    }
}
