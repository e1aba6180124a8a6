//! Providers of `ω(B(Q, r))` and of the local measure `ω ⌞ B(Q, r)`.

use serde::{Deserialize, Serialize};

use crate::domain::{boundary_sample, Domain};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::harmonic::{
    green_closed_form, green_estimate, green_gradient_closed_form, kernel_oracle, poisson_density, poly_zero_measure_in, wos_exit_points, Cell,
    HarmonicPolynomial, MeasureEstimate, WalkConfig,
};
use crate::measure::{Ball, DiscreteMeasure};

/// A ball mass with its one-sigma statistical error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub mass: f64,
    pub std_error: f64,
}

impl MassEstimate {
    pub fn exact(mass: f64) -> Self {
        MassEstimate { mass, std_error: 0.0 }
    }

    /// Distinguishable from zero: positive and above three standard errors.
    pub fn resolved(&self) -> bool {
        self.mass > 0.0 && self.mass > 3.0 * self.std_error
    }
}

/// Lost mass above which two-sided verdicts are withheld.
pub const LOST_MASS_LIMIT: f64 = 1e-3;

/// Anything that can report harmonic-measure-like masses of balls.
pub trait MeasureSource: Sync {
    fn dim(&self) -> usize;
    fn ball_mass(&self, q: &Point, r: f64) -> Result<MassEstimate>;
    /// `ω ⌞ B(q, r)` as roughly `n_points` atoms.
    fn local_measure(&self, q: &Point, r: f64, n_points: usize) -> Result<DiscreteMeasure>;
    /// Fraction of the estimator's mass that never reached the boundary.
    fn lost_mass(&self) -> f64 {
        0.0
    }
    fn label(&self) -> String;
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius {r} must be positive")))
    }
}

/// Harmonic measure from the closed-form Poisson kernel of a ball,
/// half-space or planar wedge.
#[derive(Clone, Debug)]
pub struct KernelSource {
    pub domain: Domain,
    pub pole: Point,
    pub seed: u64,
}

impl KernelSource {
    pub fn new(domain: Domain, pole: Point) -> Result<Self> {
        kernel_oracle(&domain, &pole, &Cell::Ball { center: pole, radius: 1.0 })?;
        Ok(KernelSource { domain, pole, seed: 0 })
    }
}

impl MeasureSource for KernelSource {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn ball_mass(&self, q: &Point, r: f64) -> Result<MassEstimate> {
        check_radius(r)?;
        let cell = Cell::Ball { center: *q, radius: r };
        Ok(MassEstimate::exact(kernel_oracle(&self.domain, &self.pole, &cell)?))
    }

    /// Boundary sample weighted by the kernel, scaled to the exact ball mass.
    fn local_measure(&self, q: &Point, r: f64, n_points: usize) -> Result<DiscreteMeasure> {
        let mass = self.ball_mass(q, r)?.mass;
        let sample = boundary_sample(&self.domain, &Ball::new(*q, r)?, n_points, self.seed)?;
        let weights: Vec<f64> = sample
            .points
            .iter()
            .zip(&sample.weights)
            .map(|(p, w)| Ok(w * poisson_density(&self.domain, &self.pole, p)?))
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        let measure = DiscreteMeasure::new(sample.dim, sample.points, weights)?;
        Ok(measure.scaled(mass / total))
    }

    fn label(&self) -> String {
        format!("kernel:{}", self.domain.kind())
    }
}

/// `ω_h = |∇h| H^{n-1} ⌞ {h = 0}` of a harmonic polynomial.
#[derive(Clone, Debug)]
pub struct ZeroSetSource {
    pub h: HarmonicPolynomial,
    /// Contour resolution used for ball masses.
    pub mass_points: usize,
}

impl ZeroSetSource {
    pub fn new(h: HarmonicPolynomial) -> Self {
        ZeroSetSource { h, mass_points: 4000 }
    }
}

impl MeasureSource for ZeroSetSource {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn ball_mass(&self, q: &Point, r: f64) -> Result<MassEstimate> {
        check_radius(r)?;
        match poly_zero_measure_in(&self.h, &Ball::new(*q, r)?, self.mass_points) {
            Ok(m) => Ok(MassEstimate::exact(m.mass())),
            Err(Error::EmptyMeasure) => Ok(MassEstimate::exact(0.0)),
            Err(e) => Err(e),
        }
    }

    fn local_measure(&self, q: &Point, r: f64, n_points: usize) -> Result<DiscreteMeasure> {
        check_radius(r)?;
        poly_zero_measure_in(&self.h, &Ball::new(*q, r)?, n_points)
    }

    fn label(&self) -> String {
        "zero_set".into()
    }
}

/// Empirical harmonic measure: exit points of one batch of walks, each of
/// weight `1 / n_walks`.
#[derive(Clone, Debug)]
pub struct WalkSource {
    dim: usize,
    n_walks: u64,
    points: Vec<Point>,
    pub summary: MeasureEstimate,
}

impl WalkSource {
    pub fn new(domain: &Domain, pole: &Point, cfg: &WalkConfig) -> Result<Self> {
        let (points, summary) = wos_exit_points(domain, pole, cfg)?;
        Ok(WalkSource {
            dim: domain.dim(),
            n_walks: cfg.n_walks,
            points,
            summary,
        })
    }

    pub fn exit_points(&self) -> &[Point] {
        &self.points
    }
}

impl MeasureSource for WalkSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn ball_mass(&self, q: &Point, r: f64) -> Result<MassEstimate> {
        check_radius(r)?;
        let hits = self.points.iter().filter(|p| p.dist(q) <= r).count() as f64;
        let n = self.n_walks as f64;
        let p = hits / n;
        Ok(MassEstimate {
            mass: p,
            std_error: (p * (1.0 - p) / n).sqrt().max(1.0 / n),
        })
    }

    fn local_measure(&self, q: &Point, r: f64, _n_points: usize) -> Result<DiscreteMeasure> {
        check_radius(r)?;
        let points: Vec<Point> = self.points.iter().filter(|p| p.dist(q) <= r).copied().collect();
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let w = vec![1.0 / self.n_walks as f64; points.len()];
        DiscreteMeasure::new(self.dim, points, w)
    }

    /// Truncated walks, plus escapes in the plane where Brownian motion is
    /// recurrent and an escape can only mean the walk was killed.
    fn lost_mass(&self) -> f64 {
        let s = &self.summary;
        let lost = if self.dim == 2 { s.escaped + s.truncated } else { s.truncated };
        lost as f64 / self.n_walks as f64
    }

    fn label(&self) -> String {
        format!("walks:{}", self.n_walks)
    }
}

/// A fixed discrete measure.
#[derive(Clone, Debug)]
pub struct DiscreteSource(pub DiscreteMeasure);

impl MeasureSource for DiscreteSource {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn ball_mass(&self, q: &Point, r: f64) -> Result<MassEstimate> {
        check_radius(r)?;
        Ok(MassEstimate::exact(self.0.ball_mass(&Ball::new(*q, r)?)))
    }

    fn local_measure(&self, q: &Point, r: f64, _n_points: usize) -> Result<DiscreteMeasure> {
        check_radius(r)?;
        let m = self.0.restrict(&Ball::new(*q, r)?);
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    fn label(&self) -> String {
        "discrete".into()
    }
}

/// A nonnegative function `u` with gradient, possibly estimated.
pub trait PotentialField: Sync {
    fn dim(&self) -> usize;
    /// Value and one-sigma error.
    fn value(&self, x: &Point) -> Result<(f64, f64)>;
    /// Gradient and an error bar on its Euclidean norm.
    fn gradient(&self, x: &Point) -> Result<(Point, f64)>;
    /// Values and gradients carry no error.
    fn is_exact(&self) -> bool;
}

/// `u = (sign · h)^+`.
#[derive(Clone, Debug)]
pub struct PolynomialPart {
    pub h: HarmonicPolynomial,
    pub sign: f64,
}

impl PolynomialPart {
    pub fn positive(h: HarmonicPolynomial) -> Self {
        PolynomialPart { h, sign: 1.0 }
    }

    pub fn negative(h: HarmonicPolynomial) -> Self {
        PolynomialPart { h, sign: -1.0 }
    }
}

impl PotentialField for PolynomialPart {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn value(&self, x: &Point) -> Result<(f64, f64)> {
        Ok(((self.sign * self.h.eval(x)).max(0.0), 0.0))
    }

    fn gradient(&self, x: &Point) -> Result<(Point, f64)> {
        if self.sign * self.h.eval(x) > 0.0 {
            Ok((self.h.gradient(x) * self.sign, 0.0))
        } else {
            Ok((Point::ZERO, 0.0))
        }
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Green function `G(·, pole)` of a domain, extended by zero outside it.
/// Closed form where available, walk-on-spheres otherwise.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub domain: Domain,
    pub pole: Point,
    /// `None` uses the closed form.
    pub walks: Option<WalkConfig>,
}

impl GreenField {
    pub fn closed_form(domain: Domain, pole: Point) -> Result<Self> {
        let probe = pole + Point::axis(0) * (1e-3 * domain.scale());
        if domain.contains(&probe) {
            green_closed_form(&domain, &pole, &probe)?;
        }
        Ok(GreenField { domain, pole, walks: None })
    }

    pub fn estimated(domain: Domain, pole: Point, cfg: WalkConfig) -> Self {
        GreenField {
            domain,
            pole,
            walks: Some(cfg),
        }
    }

    fn eval(&self, x: &Point) -> Result<(f64, f64)> {
        if !self.domain.contains(x) {
            return Ok((0.0, 0.0));
        }
        match &self.walks {
            None => Ok((green_closed_form(&self.domain, &self.pole, x)?, 0.0)),
            Some(cfg) => {
                let g = green_estimate(&self.domain, &self.pole, x, cfg)?;
                Ok((g.value, g.std_error))
            }
        }
    }

    /// Central difference quotient along every axis with step `h`.
    fn central(&self, x: &Point, h: f64) -> Result<(Point, f64)> {
        let mut g = Point::ZERO;
        let mut noise = 0.0f64;
        for i in 0..self.domain.dim() {
            let e = Point::axis(i) * h;
            let (a, sa) = self.eval(&(*x + e))?;
            let (b, sb) = self.eval(&(*x - e))?;
            g[i] = (a - b) / (2.0 * h);
            noise = noise.hypot(sa.hypot(sb) / (2.0 * h));
        }
        Ok((g, noise))
    }
}

impl PotentialField for GreenField {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, x: &Point) -> Result<(f64, f64)> {
        self.eval(x)
    }

    /// Exact for the closed form. For walk estimates, central differences at
    /// steps `h` and `h/2` combined by Richardson extrapolation, with
    /// `h = 10 sqrt(σ) · scale`, with `σ` the
    /// standard error of `G(x)`, and the same walk seeds are reused at every
    /// stencil point so that most of the noise cancels in the differences.
    fn gradient(&self, x: &Point) -> Result<(Point, f64)> {
        if !self.domain.contains(x) {
            return Ok((Point::ZERO, 0.0));
        }
        let Some(_) = &self.walks else {
            return Ok((green_gradient_closed_form(&self.domain, &self.pole, x)?, 0.0));
        };
        let scale = self.domain.scale();
        let room = self.domain.boundary_distance(x).min(x.dist(&self.pole));
        let h = (10.0 * self.eval(x)?.1.sqrt() * scale).min(0.5 * room);
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("gradient requested on the boundary or at the pole".into()));
        }
        let (d1, n1) = self.central(x, h)?;
        let (d2, n2) = self.central(x, 0.5 * h)?;
        let rich = (d2 * 4.0 - d1) / 3.0;
        let trunc = (d2 - d1).norm() / 3.0;
        let noise = (4.0 * n2).hypot(n1) / 3.0;
        Ok((rich, trunc + noise))
    }

    fn is_exact(&self) -> bool {
        self.walks.is_none()
    }
}
