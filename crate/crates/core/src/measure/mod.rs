//! Finitely supported Radon measures and the bounded-Lipschitz metric
//! apparatus built on them.

mod flat;
mod grassmann;
mod transport;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

pub use flat::{
    dist_to_flat, dist_to_flat_with, flat_f_norm_closed_form, flat_sample, normalized_flat_density,
    FlatFit, FlatMeasureSpec, FlatSearch,
};
pub use grassmann::{
    hyperplane_grid, minimize_over_hyperplanes, minimize_two_stage, HyperplaneMin, OrientationSearch,
};
pub use transport::{f_dist, f_dist_ball};

/// A closed ball `B(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dist(&self.center) <= self.radius
    }
}

/// Weighted point cloud in `R^dim`, `dim` in {2, 3}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("invalid weight {w}")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite point".into()));
        }
        if dim == 2 && points.iter().any(|p| p.z() != 0.0) {
            return Err(Error::InvalidArgument(
                "planar measure has a nonzero z coordinate".into(),
            ));
        }
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
        })
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        DiscreteMeasure {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// `weight * delta_p`.
    pub fn dirac(dim: usize, p: Point, weight: f64) -> Result<Self> {
        Self::new(dim, vec![p], vec![weight])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of the closed ball.
    pub fn ball_mass(&self, ball: &Ball) -> f64 {
        self.iter()
            .filter(|(p, _)| ball.contains(p))
            .map(|(_, w)| w)
            .sum()
    }

    /// Appends an atom; the caller guarantees `weight >= 0`.
    pub(crate) fn push(&mut self, p: Point, weight: f64) {
        debug_assert!(weight >= 0.0);
        self.points.push(p);
        self.weights.push(weight);
    }

    /// `mu ⌞ ball`: atoms with `|p - center| <= radius`.
    pub fn restrict(&self, ball: &Ball) -> DiscreteMeasure {
        let (points, weights) = self.iter().filter(|(p, _)| ball.contains(p)).unzip();
        DiscreteMeasure {
            dim: self.dim,
            points,
            weights,
        }
    }

    /// Push-forward under `z -> (z - x) / r`.
    pub fn rescale(&self, x: &Point, r: f64) -> Result<DiscreteMeasure> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rescale needs r > 0, got {r}"
            )));
        }
        Ok(DiscreteMeasure {
            dim: self.dim,
            points: self.points.iter().map(|p| (*p - *x) / r).collect(),
            weights: self.weights.clone(),
        })
    }

    /// `c * mu`.
    pub fn scaled(&self, c: f64) -> DiscreteMeasure {
        assert!(c >= 0.0 && c.is_finite(), "scale factor must be nonnegative");
        DiscreteMeasure {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    /// Sum of two measures on the same space.
    pub fn union(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        out.points.extend_from_slice(&other.points);
        out.weights.extend_from_slice(&other.weights);
        out
    }

    /// `F_s(mu) = ∫ (s - |z|)^+ dmu(z)`.
    pub fn f_norm(&self, s: f64) -> f64 {
        self.iter()
            .map(|(p, w)| w * (s - p.norm()).max(0.0))
            .sum()
    }

    /// `F_{B(x, r)}(mu) = ∫ dist(z, B(x, r)^c) dmu(z)`.
    pub fn f_norm_ball(&self, ball: &Ball) -> f64 {
        self.iter()
            .map(|(p, w)| w * (ball.radius - p.dist(&ball.center)).max(0.0))
            .sum()
    }

    /// Coalesces atoms that share a cell of the cubic lattice whose cells have
    /// diameter `eps` (pitch `eps / sqrt(dim)`). A cell holding several atoms
    /// becomes one atom at their weighted centroid carrying the summed weight,
    /// so no atom moves by more than `eps` and measures carried by a curve or
    /// surface stay close to it. A cell holding one atom keeps it in place.
    pub fn quantize(&self, eps: f64) -> Result<DiscreteMeasure> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "quantize needs eps > 0, got {eps}"
            )));
        }
        let pitch = eps / (self.dim as f64).sqrt();
        let cell = |p: &Point| -> [i64; 3] {
            let mut k = [0i64; 3];
            for (i, ki) in k.iter_mut().enumerate().take(self.dim) {
                *ki = (p[i] / pitch).floor() as i64;
            }
            k
        };
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut groups: Vec<([i64; 3], Vec<usize>)> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let k = cell(p);
            match index.get(&k) {
                Some(&g) => groups[g].1.push(i),
                None => {
                    index.insert(k, groups.len());
                    groups.push((k, vec![i]));
                }
            }
        }
        let mut out = DiscreteMeasure::empty(self.dim);
        for (_, members) in groups {
            if let [only] = members[..] {
                out.push(self.points[only], self.weights[only]);
            } else {
                let w: f64 = members.iter().map(|&i| self.weights[i]).sum();
                let c = if w > 0.0 {
                    members
                        .iter()
                        .fold(Point::ZERO, |acc, &i| acc + self.points[i] * self.weights[i])
                        / w
                } else {
                    self.points[members[0]]
                };
                out.push(c, w);
            }
        }
        Ok(out)
    }

    /// Quantizes with the smallest `eps = eps0 * 1.2^k` that leaves at most
    /// `max_atoms` atoms. Returns the measure and the `eps` used (0 when no
    /// coalescing was needed).
    pub fn quantize_to_budget(&self, eps0: f64, max_atoms: usize) -> Result<(DiscreteMeasure, f64)> {
        if self.len() <= max_atoms {
            return Ok((self.clone(), 0.0));
        }
        let mut eps = eps0;
        loop {
            let q = self.quantize(eps)?;
            if q.len() <= max_atoms {
                return Ok((q, eps));
            }
            eps *= 1.2;
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "ambient dimension must be 2 or 3, got {dim}"
        )))
    }
}

/// Wire format: `{"dim": n, "points": [[...]], "weights": [...]}`.
#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        check_dim(r.dim)?;
        if let Some(p) = r.points.iter().find(|p| p.len() != r.dim) {
            return Err(Error::InvalidArgument(format!(
                "point {p:?} does not have {} coordinates",
                r.dim
            )));
        }
        let points = r.points.iter().map(|p| Point::from_slice(p)).collect();
        DiscreteMeasure::new(r.dim, points, r.weights)
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr {
            dim: m.dim,
            points: m.points.iter().map(|p| p.to_vec(m.dim)).collect(),
            weights: m.weights,
        }
    }
}

/// Symmetric Hausdorff distance between the supports of `mu` and `nu`
/// clipped to `ball`.
pub fn support_hausdorff(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ball: &Ball) -> Result<f64> {
    let support = |m: &DiscreteMeasure| -> Vec<Point> {
        m.iter()
            .filter(|(p, w)| *w > 0.0 && ball.contains(p))
            .map(|(p, _)| *p)
            .collect()
    };
    let a = support(mu);
    let b = support(nu);
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a)))
}

/// `sup_{a in A} dist(a, B)` by direct scan.
pub(crate) fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| p.dist(q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Matrix of `F_r(mu_i, mu)` with a convergence verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakConvergenceReport {
    pub radii: Vec<f64>,
    /// `distances[i][k] = F_{radii[k]}(seq[i], mu)`.
    pub distances: Vec<Vec<f64>>,
    /// Per-radius acceptance threshold, `rel_tol * F_r(mu)`.
    pub thresholds: Vec<f64>,
    pub converged: bool,
}

/// Checks `lim F_r(mu_i, mu) = 0` at each sampled radius: every column must
/// be nonincreasing up to its threshold and end below it.
pub fn weak_convergence_check(
    seq: &[DiscreteMeasure],
    mu: &DiscreteMeasure,
    radii: &[f64],
    rel_tol: f64,
) -> Result<WeakConvergenceReport> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidArgument(format!("radius {r} is not positive")));
    }
    let thresholds: Vec<f64> = radii
        .iter()
        .map(|&r| (rel_tol * mu.f_norm(r)).max(f64::EPSILON))
        .collect();
    let distances: Vec<Vec<f64>> = seq
        .iter()
        .map(|m| radii.iter().map(|&r| f_dist(m, mu, r)).collect())
        .collect();
    let converged = !seq.is_empty()
        && (0..radii.len()).all(|k| {
            let col: Vec<f64> = distances.iter().map(|row| row[k]).collect();
            let monotone = col.windows(2).all(|w| w[1] <= w[0] + thresholds[k]);
            monotone && *col.last().unwrap() <= thresholds[k]
        });
    Ok(WeakConvergenceReport {
        radii: radii.to_vec(),
        distances,
        thresholds,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    fn p2(x: f64, y: f64) -> Point {
        Point::new2(x, y)
    }

    #[test]
    fn restrict_containment_and_exclusion() {
        let unit = Ball::new(Point::ZERO, 1.0).unwrap();
        let d0 = DiscreteMeasure::dirac(2, Point::ZERO, 1.0).unwrap();
        assert_eq!(d0.restrict(&unit), d0);
        let d2 = DiscreteMeasure::dirac(2, p2(2.0, 0.0), 1.0).unwrap();
        assert!(d2.restrict(&unit).is_empty());
    }

    #[test]
    fn restrict_matches_brute_force_scan() {
        let mut rng = stream(11, Purpose::Experiment, 0);
        let pts: Vec<Point> = (0..100)
            .map(|_| p2(2.0 * rng.gen::<f64>(), 2.0 * rng.gen::<f64>()))
            .collect();
        let mu = DiscreteMeasure::new(2, pts.clone(), vec![1.0; 100]).unwrap();
        let unit = Ball::new(Point::ZERO, 1.0).unwrap();
        let scan = pts.iter().filter(|p| p.x().hypot(p.y()) <= 1.0).count();
        assert_eq!(mu.restrict(&unit).mass(), scan as f64);
        assert!(mu.restrict(&unit).mass() <= mu.mass());
    }

    #[test]
    fn rescale_examples() {
        let d = DiscreteMeasure::dirac(2, p2(1.0, 0.0), 1.0).unwrap();
        assert_eq!(d.rescale(&Point::ZERO, 1.0).unwrap(), d);
        let moved = d.rescale(&p2(1.0, 0.0), 0.5).unwrap();
        assert_eq!(moved.points()[0], Point::ZERO);
        assert!(matches!(
            d.rescale(&Point::ZERO, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(d.rescale(&Point::ZERO, -1.0).is_err());
    }

    #[test]
    fn rescaled_ball_masses() {
        // T_{x,r}[mu](B(0,s)) = mu(B(x, s r))
        let mut rng = stream(12, Purpose::Experiment, 0);
        let pts: Vec<Point> = (0..200)
            .map(|_| p2(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0))
            .collect();
        let mu = DiscreteMeasure::new(2, pts, vec![0.5; 200]).unwrap();
        let x = p2(0.3, -0.2);
        let r = 0.7;
        let t = mu.rescale(&x, r).unwrap();
        for s in [0.25, 0.5, 1.0, 2.0] {
            let lhs = t.ball_mass(&Ball::new(Point::ZERO, s).unwrap());
            let rhs = mu.ball_mass(&Ball::new(x, s * r).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn f_norm_examples() {
        let d0 = DiscreteMeasure::dirac(2, Point::ZERO, 1.0).unwrap();
        assert_eq!(d0.f_norm(1.0), 1.0);
        let d1 = DiscreteMeasure::dirac(2, p2(1.0, 0.0), 1.0).unwrap();
        assert_eq!(d1.f_norm(1.0), 0.0);
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(DiscreteMeasure::new(4, vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(2, vec![Point::ZERO], vec![]).is_err());
        assert!(DiscreteMeasure::new(2, vec![Point::ZERO], vec![-1.0]).is_err());
        assert!(DiscreteMeasure::new(2, vec![Point::new3(0.0, 0.0, 1.0)], vec![1.0]).is_err());
    }

    #[test]
    fn quantize_no_merge_when_eps_below_gap() {
        let pts = vec![p2(0.0, 0.0), p2(0.1, 0.0), p2(0.0, 0.1), p2(0.35, 0.4)];
        let mu = DiscreteMeasure::new(2, pts, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        // minimal gap is 0.1
        let q = mu.quantize(0.09).unwrap();
        assert_eq!(q, mu);
    }

    #[test]
    fn quantize_forced_merge() {
        let eps = 0.1;
        let pts = vec![p2(0.51, 0.51), p2(0.51 + eps / 2.0 * 0.5, 0.51)];
        let mu = DiscreteMeasure::new(2, pts, vec![1.0, 1.0]).unwrap();
        let q = mu.quantize(eps).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights()[0], 2.0);
    }

    #[test]
    fn quantize_error_bound_exhaustive() {
        let mut rng = stream(13, Purpose::Experiment, 0);
        for trial in 0..50 {
            let n = 20 + trial;
            let pts: Vec<Point> = (0..n)
                .map(|_| p2(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
                .collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mu = DiscreteMeasure::new(2, pts, w).unwrap();
            for eps in [0.01, 0.05, 0.2] {
                let q = mu.quantize(eps).unwrap();
                assert!((q.mass() - mu.mass()).abs() < 1e-12);
                for s in [0.3, 0.7, 1.0, 1.5] {
                    let diff = (mu.f_norm(s) - q.f_norm(s)).abs();
                    let bound = eps * mu.ball_mass(&Ball::new(Point::ZERO, s + eps).unwrap());
                    assert!(diff <= bound + 1e-12, "diff {diff} bound {bound}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = stream(14, Purpose::Experiment, 0);
        let pts: Vec<Point> = (0..30)
            .map(|_| Point::new3(rng.gen(), rng.gen::<f64>() * 1e-7, rng.gen::<f64>() * 1e9))
            .collect();
        let w: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() / 3.0).collect();
        let mu = DiscreteMeasure::new(3, pts, w).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        let back: DiscreteMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
        assert!(s.starts_with("{\"dim\":3,\"points\":[["));
    }

    #[test]
    fn json_rejects_bad_shapes() {
        let bad = r#"{"dim":2,"points":[[0.0,1.0,2.0]],"weights":[1.0]}"#;
        assert!(serde_json::from_str::<DiscreteMeasure>(bad).is_err());
        let neg = r#"{"dim":2,"points":[[0.0,1.0]],"weights":[-1.0]}"#;
        assert!(serde_json::from_str::<DiscreteMeasure>(neg).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let ball = Ball::new(Point::ZERO, 1.0).unwrap();
        let xs: Vec<Point> = (0..=40).map(|k| p2(-0.9 + 0.045 * k as f64, 0.0)).collect();
        let line = DiscreteMeasure::new(2, xs.clone(), vec![1.0; xs.len()]).unwrap();
        assert_eq!(support_hausdorff(&line, &line, &ball).unwrap(), 0.0);
        let d = 0.1;
        let ys: Vec<Point> = xs.iter().map(|p| p2(p.x(), d)).collect();
        let shifted = DiscreteMeasure::new(2, ys, vec![1.0; xs.len()]).unwrap();
        let h = support_hausdorff(&line, &shifted, &ball).unwrap();
        assert!((h - d).abs() < 1e-12);
        let far = DiscreteMeasure::dirac(2, p2(3.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            support_hausdorff(&line, &far, &ball),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn weak_convergence_constant_sequence() {
        let mu = DiscreteMeasure::new(2, vec![p2(0.1, 0.2), p2(-0.3, 0.0)], vec![1.0, 2.0]).unwrap();
        let rep = weak_convergence_check(&vec![mu.clone(); 4], &mu, &[0.5, 1.0], 1e-3).unwrap();
        assert!(rep.distances.iter().flatten().all(|&d| d == 0.0));
        assert!(rep.converged);
    }

    #[test]
    fn weak_convergence_sliding_dirac() {
        // closed form: F_1(delta_{(t,0)}, delta_0) = t for 0 <= t <= 1/2
        let mu = DiscreteMeasure::dirac(2, Point::ZERO, 1.0).unwrap();
        let seq: Vec<DiscreteMeasure> = (2..=2000)
            .step_by(9)
            .map(|i| DiscreteMeasure::dirac(2, p2(1.0 / i as f64, 0.0), 1.0).unwrap())
            .collect();
        let rep = weak_convergence_check(&seq, &mu, &[1.0], 1e-3).unwrap();
        for (k, row) in rep.distances.iter().enumerate() {
            let i = 2 + 9 * k;
            assert!((row[0] - 1.0 / i as f64).abs() < 1e-12);
        }
        assert!(rep.converged);
        let short = weak_convergence_check(&seq[..3], &mu, &[1.0], 1e-3).unwrap();
        assert!(!short.converged);
    }
}
