//! Multivariate polynomials with exact symbolic calculus, and the harmonic
//! subclass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// Exponent vector; unused trailing slots are zero.
pub type MultiIndex = [u32; 3];

/// Sparse polynomial in `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, c, [0; 3])
    }

    pub fn monomial(dim: usize, c: f64, alpha: MultiIndex) -> Self {
        let mut p = Self::zero(dim);
        assert!(alpha[dim..].iter().all(|&a| a == 0), "exponent beyond dimension");
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut alpha = [0; 3];
        alpha[i] = 1;
        Self::monomial(dim, 1.0, alpha)
    }

    pub fn from_terms(dim: usize, terms: &[(f64, MultiIndex)]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension {dim}")));
        }
        let mut p = Self::zero(dim);
        for (c, alpha) in terms {
            if alpha[dim..].iter().any(|&a| a != 0) {
                return Err(Error::InvalidArgument(format!(
                    "multi-index {alpha:?} has too many variables for dimension {dim}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
            p.add_term(*alpha, *c);
        }
        Ok(p)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(alpha).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&alpha);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, v) in &self.terms {
            p.add_term(*a, v * c);
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut p = self.clone();
        for (a, v) in &o.terms {
            p.add_term(*a, *v);
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut p = Self::zero(self.dim);
        for (a, u) in &self.terms {
            for (b, v) in &o.terms {
                p.add_term([a[0] + b[0], a[1] + b[1], a[2] + b[2]], u * v);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.dim, 1.0), |acc, _| acc.mul(self))
    }

    /// `∂/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, v) in &self.terms {
            if a[i] > 0 {
                let mut b = *a;
                b[i] -= 1;
                p.add_term(b, v * a[i] as f64);
            }
        }
        p
    }

    /// Laplacian in the first `k` variables.
    fn partial_laplacian(&self, k: usize) -> Self {
        (0..k).fold(Self::zero(self.dim), |acc, i| {
            acc.add(&self.derivative(i).derivative(i))
        })
    }

    pub fn laplacian(&self) -> Self {
        self.partial_laplacian(self.dim)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| c * x[0].powi(a[0] as i32) * x[1].powi(a[1] as i32) * x[2].powi(a[2] as i32))
            .sum()
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let mut g = Point::ZERO;
        for (a, c) in &self.terms {
            for i in 0..self.dim {
                if a[i] == 0 {
                    continue;
                }
                let mut t = c * a[i] as f64;
                for j in 0..self.dim {
                    let e = if j == i { a[j] - 1 } else { a[j] };
                    t *= x[j].powi(e as i32);
                }
                g[i] += t;
            }
        }
        g
    }

    /// `X -> p(r X + y)`.
    pub fn compose_affine(&self, y: &Point, r: f64) -> Self {
        let lin: Vec<Polynomial> = (0..self.dim)
            .map(|i| {
                Self::variable(self.dim, i)
                    .scale(r)
                    .add(&Self::constant(self.dim, y[i]))
            })
            .collect();
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            let mut t = Self::constant(self.dim, *c);
            for i in 0..self.dim {
                t = t.mul(&lin[i].pow(a[i]));
            }
            out = out.add(&t);
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A polynomial whose Laplacian vanishes identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct HarmonicPolynomial {
    poly: Polynomial,
}

impl HarmonicPolynomial {
    /// Accepts `p` when every coefficient of `Δp` is zero. Coefficient
    /// cancellation is exact for polynomials with representable coefficients;
    /// `rel_tol` absorbs rounding in coefficients produced by arithmetic.
    pub fn new(p: Polynomial, rel_tol: f64) -> Result<Self> {
        let lap = p.laplacian();
        let scale = p.max_coefficient().max(f64::MIN_POSITIVE);
        if lap.max_coefficient() > rel_tol * scale * (1 + p.degree() * p.degree()) as f64 {
            return Err(Error::InvalidArgument(format!(
                "polynomial is not harmonic: Laplacian has coefficient {}",
                lap.max_coefficient()
            )));
        }
        Ok(HarmonicPolynomial { poly: p })
    }

    /// Exact constructor: the Laplacian must cancel to the zero polynomial.
    pub fn exact(p: Polynomial) -> Result<Self> {
        Self::new(p, 0.0)
    }

    /// `x · normal`.
    pub fn linear(dim: usize, normal: &Point) -> Self {
        let p = (0..dim).fold(Polynomial::zero(dim), |acc, i| {
            acc.add(&Polynomial::variable(dim, i).scale(normal[i]))
        });
        HarmonicPolynomial { poly: p }
    }

    /// `x^2 - y^2` in the plane.
    pub fn saddle() -> Self {
        let p = Polynomial::from_terms(2, &[(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])]).unwrap();
        HarmonicPolynomial { poly: p }
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.poly.eval(x)
    }

    pub fn gradient(&self, x: &Point) -> Point {
        self.poly.gradient(x)
    }

    /// `h_{y,r}(X) = h(r X + y) / r`; harmonic again.
    pub fn rescaled(&self, y: &Point, r: f64) -> Self {
        HarmonicPolynomial {
            poly: self.poly.compose_affine(y, r).scale(1.0 / r),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        HarmonicPolynomial {
            poly: self.poly.scale(c),
        }
    }

    /// `true` when every term has the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.poly.terms.keys().all(|a| a.iter().sum::<u32>() == d)
    }
}

/// Exact value and gradient.
pub fn poly_eval(h: &HarmonicPolynomial, x: &Point) -> (f64, Point) {
    (h.eval(x), h.gradient(x))
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Basis of the homogeneous harmonic polynomials of degree `k` in `dim`
/// variables (2 in the plane, `2k + 1` in space for `k >= 1`).
///
/// Cauchy-Kovalevskaya in the last variable `z`: initial value `f` and
/// normal derivative `g`, monomials in the other variables, extend to
/// `sum_j (-1)^j (z^{2j} / (2j)! Δ'^j f + z^{2j+1} / (2j+1)! Δ'^j g)`.
/// Everything is multiplied by `k!` so that coefficients stay integral and
/// the Laplacian cancels exactly.
pub fn harmonic_basis(dim: usize, k: u32) -> Vec<HarmonicPolynomial> {
    assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
    if k == 0 {
        return vec![HarmonicPolynomial {
            poly: Polynomial::constant(dim, 1.0),
        }];
    }
    let z = dim - 1;
    let tangential = |deg: u32| -> Vec<MultiIndex> {
        if dim == 2 {
            vec![[deg, 0, 0]]
        } else {
            (0..=deg).map(|a| [a, deg - a, 0]).collect()
        }
    };
    let extend = |seed: Polynomial, odd: bool| -> Polynomial {
        let mut out = Polynomial::zero(dim);
        let mut lap = seed;
        let mut j = 0u32;
        while !lap.is_zero() {
            let power = 2 * j + odd as u32;
            let mut alpha = [0; 3];
            alpha[z] = power;
            let zpow = Polynomial::monomial(dim, 1.0, alpha);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * factorial(k) / factorial(power);
            out = out.add(&lap.mul(&zpow).scale(c));
            lap = lap.partial_laplacian(z);
            j += 1;
        }
        out
    };
    let mut basis = Vec::new();
    for alpha in tangential(k) {
        let p = extend(Polynomial::monomial(dim, 1.0, alpha), false);
        basis.push(HarmonicPolynomial::exact(p).expect("CK extension is harmonic"));
    }
    for alpha in tangential(k - 1) {
        let p = extend(Polynomial::monomial(dim, 1.0, alpha), true);
        basis.push(HarmonicPolynomial::exact(p).expect("CK extension is harmonic"));
    }
    basis
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coefficient: f64,
    exponents: Vec<u32>,
}

/// Wire format: `{"dim": n, "terms": [{"coefficient": c, "exponents": [..]}]}`.
#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

impl TryFrom<PolyRepr> for HarmonicPolynomial {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        let mut terms = Vec::with_capacity(r.terms.len());
        for t in &r.terms {
            if t.exponents.len() != r.dim {
                return Err(Error::InvalidArgument(format!(
                    "exponent vector {:?} does not match dimension {}",
                    t.exponents, r.dim
                )));
            }
            let mut a = [0; 3];
            a[..r.dim].copy_from_slice(&t.exponents);
            terms.push((t.coefficient, a));
        }
        HarmonicPolynomial::new(Polynomial::from_terms(r.dim, &terms)?, 1e-12)
    }
}

impl From<HarmonicPolynomial> for PolyRepr {
    fn from(h: HarmonicPolynomial) -> Self {
        let dim = h.poly.dim;
        PolyRepr {
            dim,
            terms: h
                .poly
                .terms
                .iter()
                .map(|(a, c)| TermRepr {
                    coefficient: *c,
                    exponents: a[..dim].to_vec(),
                })
                .collect(),
        }
    }
}
