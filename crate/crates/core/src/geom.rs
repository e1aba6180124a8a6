//! Small fixed-size vector type shared by the 2D and 3D code paths.
//!
//! Planar points keep `z = 0`; the owning container records the ambient
//! dimension.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub const ZERO: Point = Point([0.0; 3]);

    pub const fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    /// Builds a point from the first `dim` entries of a slice.
    pub fn from_slice(v: &[f64]) -> Self {
        let mut p = [0.0; 3];
        for (dst, src) in p.iter_mut().zip(v) {
            *dst = *src;
        }
        Point(p)
    }

    /// Unit vector along coordinate axis `i`.
    pub fn axis(i: usize) -> Self {
        let mut p = [0.0; 3];
        p[i] = 1.0;
        Point(p)
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    pub fn cross(&self, o: &Point) -> Point {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Point([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    /// Returns `self / |self|`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self / n)
    }

    /// The first `dim` coordinates as a vector.
    pub fn to_vec(&self, dim: usize) -> Vec<f64> {
        self.0[..dim].to_vec()
    }

    /// Planar angle `atan2(y, x)`.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    /// Rotation by +90 degrees in the xy-plane.
    pub fn perp(&self) -> Point {
        Point([-self.0[1], self.0[0], 0.0])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// Unit vector at polar angle `theta` in the plane.
pub fn unit2(theta: f64) -> Point {
    Point::new2(theta.cos(), theta.sin())
}

/// Completes `normal` to an orthonormal frame `(t1, t2, normal)` in 3D.
pub fn orthonormal_frame(normal: &Point) -> (Point, Point) {
    let helper = if normal.0[0].abs() < 0.9 {
        Point::axis(0)
    } else {
        Point::axis(1)
    };
    let t1 = (helper - *normal * helper.dot(normal))
        .normalized()
        .expect("helper axis is never parallel to a unit normal");
    let t2 = normal.cross(&t1);
    (t1, t2)
}

/// Volume of the unit ball in `R^k` (`k = 0..=3`).
pub fn unit_ball_volume(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unit_ball_volume: dimension {k} unsupported"),
    }
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        *self = *self + o;
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, o: Point) {
        *self = *self - o;
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        p * self
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, s: f64) -> Point {
        Point([self.0[0] / s, self.0[1] / s, self.0[2] / s])
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
