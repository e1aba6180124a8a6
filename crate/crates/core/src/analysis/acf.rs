//! The two-phase functional
//! `γ(Q, r) = (r^{-2} ∫_{B(Q,r)} |∇u⁺|² |X-Q|^{2-n} dX) · (r^{-2} ∫_{B(Q,r)} |∇u⁻|² |X-Q|^{2-n} dX)`
//! and the Beurling product built from ball masses.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::source::{MassEstimate, MeasureSource, PotentialField, LOST_MASS_LIMIT};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::quad::integrate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuadSpec {
    /// Nested adaptive Gauss-Kronrod in radius and angle(s).
    Polar { abs_tol: f64, rel_tol: f64, max_panels: usize },
    /// Midpoint rule on a square grid; planar only.
    Rectangular { cells: usize },
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::Polar {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_panels: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaValue {
    pub gamma: f64,
    pub error_bar: f64,
    /// The two scaled integrals.
    pub factors: [f64; 2],
    pub factor_errors: [f64; 2],
}

/// Integrand `|∇u|²` and, when `u` is estimated, the first-order error
/// `2|∇u|e + e²` of that square.
fn grad_sq(u: &dyn PotentialField, x: &Point, want_error: bool) -> Result<(f64, f64)> {
    let (g, e) = u.gradient(x)?;
    let n = g.norm();
    Ok((n * n, if want_error { 2.0 * n * e + e * e } else { 0.0 }))
}

/// `∫_0^r ρ^{n-1} ρ^{2-n} ∫_{S^{n-1}} f(Q + ρθ) dθ dρ` by nested quadrature.
fn polar(
    dim: usize,
    q: &Point,
    r: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
    f: &dyn Fn(&Point) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut failure: Option<Error> = None;
    let mut inner_error = 0.0f64;
    let mut eval = |x: Point| match f(&x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let outer = integrate(
        |rho| {
            let sphere = if dim == 2 {
                integrate(|t| eval(*q + Point::new2(t.cos(), t.sin()) * rho), 0.0, TAU, abs_tol, rel_tol, max_panels)
            } else {
                let mut err = 0.0;
                let res = integrate(
                    |th| {
                        let (st, ct) = th.sin_cos();
                        let ring = integrate(
                            |ph| eval(*q + Point::new3(st * ph.cos(), st * ph.sin(), ct) * rho),
                            0.0,
                            TAU,
                            abs_tol,
                            rel_tol,
                            max_panels,
                        );
                        err += ring.error * st;
                        ring.value * st
                    },
                    0.0,
                    PI,
                    abs_tol,
                    rel_tol,
                    max_panels,
                );
                crate::quad::QuadResult {
                    value: res.value,
                    error: res.error + err / 15.0,
                }
            };
            inner_error = inner_error.max(sphere.error);
            // weight ρ^{n-1} from the volume element times |X - Q|^{2-n}
            rho * sphere.value
        },
        0.0,
        r,
        abs_tol,
        rel_tol,
        max_panels,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((outer.value, outer.error + inner_error * r * r / 2.0))
}

fn rectangular(q: &Point, r: f64, cells: usize, f: &dyn Fn(&Point) -> Result<f64>) -> Result<(f64, f64)> {
    let run = |n: usize| -> Result<f64> {
        let h = 2.0 * r / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = Point::new2(-r + h * (i as f64 + 0.5), -r + h * (j as f64 + 0.5));
                if x.norm() < r {
                    s += f(&(*q + x))? * h * h;
                }
            }
        }
        Ok(s)
    };
    let fine = run(cells)?;
    let coarse = run((cells / 2).max(1))?;
    Ok((fine, (fine - coarse).abs()))
}

fn factor(u: &dyn PotentialField, q: &Point, r: f64, spec: &QuadSpec) -> Result<(f64, f64)> {
    let dim = u.dim();
    let with_error = !u.is_exact();
    let value = |x: &Point| grad_sq(u, x, false).map(|v| v.0);
    let noise = |x: &Point| grad_sq(u, x, true).map(|v| v.1);
    let (v, e, n) = match *spec {
        QuadSpec::Polar {
            abs_tol,
            rel_tol,
            max_panels,
        } => {
            let (v, e) = polar(dim, q, r, abs_tol, rel_tol, max_panels, &value)?;
            let n = if with_error {
                polar(dim, q, r, abs_tol.max(1e-6), rel_tol.max(1e-3), max_panels, &noise)?.0
            } else {
                0.0
            };
            (v, e, n)
        }
        QuadSpec::Rectangular { cells } => {
            if dim != 2 {
                return Err(Error::QuadratureRequiresPolar);
            }
            if cells < 2 {
                return Err(Error::InvalidArgument("rectangular grid needs at least 2 cells".into()));
            }
            let (v, e) = rectangular(q, r, cells, &value)?;
            let n = if with_error { rectangular(q, r, cells, &noise)?.0 } else { 0.0 };
            (v, e, n)
        }
    };
    let r2 = r * r;
    Ok((v / r2, (e + n) / r2))
}

/// `γ(Q, r)` with an error bar combining quadrature error and the error of
/// estimated gradients.
pub fn acf_gamma(
    u_plus: &dyn PotentialField,
    u_minus: &dyn PotentialField,
    q: &Point,
    r: f64,
    spec: &QuadSpec,
) -> Result<GammaValue> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    if u_plus.dim() != u_minus.dim() {
        return Err(Error::InvalidArgument("u⁺ and u⁻ live in different dimensions".into()));
    }
    let (a, ea) = factor(u_plus, q, r, spec)?;
    let (b, eb) = factor(u_minus, q, r, spec)?;
    Ok(GammaValue {
        gamma: a * b,
        error_bar: a * eb + b * ea + ea * eb,
        factors: [a, b],
        factor_errors: [ea, eb],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    pub q: Point,
    /// Strictly increasing.
    pub radii: Vec<f64>,
    pub gamma: Vec<f64>,
    pub factors: Vec<[f64; 2]>,
    pub error_bars: Vec<f64>,
    /// `γ(r_i) <= γ(r_k) + e_i + e_k` for every `r_i < r_k`.
    pub monotone: bool,
}

pub fn gamma_profile(
    u_plus: &dyn PotentialField,
    u_minus: &dyn PotentialField,
    q: &Point,
    radii: &[f64],
    spec: &QuadSpec,
) -> Result<GammaProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("gamma radii must be nonempty and strictly increasing".into()));
    }
    let values = radii
        .iter()
        .map(|&r| acf_gamma(u_plus, u_minus, q, r, spec))
        .collect::<Result<Vec<_>>>()?;
    let gamma: Vec<f64> = values.iter().map(|v| v.gamma).collect();
    let error_bars: Vec<f64> = values.iter().map(|v| v.error_bar).collect();
    let monotone = (0..gamma.len()).all(|i| (i + 1..gamma.len()).all(|k| gamma[i] <= gamma[k] + error_bars[i] + error_bars[k]));
    Ok(GammaProfile {
        q: *q,
        radii: radii.to_vec(),
        gamma,
        factors: values.iter().map(|v| v.factors).collect(),
        error_bars,
        monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeurlingProfile {
    pub q: Point,
    pub radii: Vec<f64>,
    pub mass_plus: Vec<MassEstimate>,
    pub mass_minus: Vec<MassEstimate>,
    /// `P(r) = (ω⁺(B)/r^{n-1}) (ω⁻(B)/r^{n-1})`.
    pub products: Vec<f64>,
    pub product_errors: Vec<f64>,
    /// `P(r) / γ(Q, 2r)^{1/2}` when potentials were supplied.
    pub gamma_ratios: Option<Vec<f64>>,
    /// `max P / min P`.
    pub spread: f64,
    pub factor: f64,
    /// `spread <= factor`; `None` when withheld.
    pub bounded: Option<bool>,
    pub withheld: Option<String>,
}

/// Potentials and quadrature for the `γ(Q, 2r)` comparison.
pub type GammaInputs<'a> = (&'a dyn PotentialField, &'a dyn PotentialField, QuadSpec);

/// Product profile of the two ball masses with a bounded-spread verdict.
pub fn beurling_check(
    plus: &dyn MeasureSource,
    minus: &dyn MeasureSource,
    q: &Point,
    radii: &[f64],
    factor: f64,
    gamma: Option<GammaInputs<'_>>,
) -> Result<BeurlingProfile> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if plus.dim() != minus.dim() {
        return Err(Error::InvalidArgument("sides live in different dimensions".into()));
    }
    let k = plus.dim() as i32 - 1;
    let mut mass_plus = Vec::new();
    let mut mass_minus = Vec::new();
    let mut products = Vec::new();
    let mut product_errors = Vec::new();
    for &r in radii {
        let a = plus.ball_mass(q, r)?;
        let b = minus.ball_mass(q, r)?;
        let rk = r.powi(k);
        let p = a.mass * b.mass / (rk * rk);
        products.push(p);
        product_errors.push((a.std_error * b.mass).hypot(b.std_error * a.mass) / (rk * rk));
        mass_plus.push(a);
        mass_minus.push(b);
    }
    let gamma_ratios = match gamma {
        Some((up, um, spec)) => Some(
            radii
                .iter()
                .zip(&products)
                .map(|(&r, p)| Ok(p / acf_gamma(up, um, q, 2.0 * r, &spec)?.gamma.sqrt()))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let hi = products.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = products.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let lost = plus.lost_mass().max(minus.lost_mass());
    let withheld = if lost > LOST_MASS_LIMIT {
        Some(format!("lost mass {lost} exceeds {LOST_MASS_LIMIT}"))
    } else if mass_plus.iter().chain(&mass_minus).any(|m| !m.resolved()) {
        Some("unresolved ball mass".to_string())
    } else {
        None
    };
    Ok(BeurlingProfile {
        q: *q,
        radii: radii.to_vec(),
        mass_plus,
        mass_minus,
        products,
        product_errors,
        gamma_ratios,
        spread,
        factor,
        bounded: withheld.is_none().then_some(spread <= factor),
        withheld,
    })
}
