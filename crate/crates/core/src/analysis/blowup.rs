//! Blow-up sequences `ω_j = T_{Q, r_j}[ω] / ω(B(Q, r_j))` and polynomial fits
//! of the rescaled potentials.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::source::{MassEstimate, MeasureSource, PotentialField};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::harmonic::{harmonic_basis, HarmonicPolynomial, Polynomial};
use crate::measure::{dist_to_flat_with, support_hausdorff, Ball, DiscreteMeasure, FlatSearch};

/// Rescaled potentials `u_j(X) = u(r_j X + Q) r_j^{n-2} / ω(B(Q, r_j))` on a
/// fixed grid of the unit ball; with two sides the difference `u⁺_j - u⁻_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSamples {
    pub points: Vec<Point>,
    /// `values[j][k]` at scale `j`, grid point `k`.
    pub values: Vec<Vec<f64>>,
    pub errors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    pub q: Point,
    pub dim: usize,
    /// Decreasing.
    pub radii: Vec<f64>,
    pub masses: Vec<MassEstimate>,
    /// Normalized iterates restricted to `B(0, 1)`.
    pub measures: Vec<DiscreteMeasure>,
    /// `ω_j(B(0, 1))`; 1 up to the discretization of the local measure.
    pub unit_masses: Vec<f64>,
    /// Support distance in `B(0, 1)` from each iterate to the last one.
    pub support_hausdorff: Vec<f64>,
    /// `ω(B(Q, r_j)) / ω(B(Q, r_j / 2))` where the next radius is `r_j / 2`.
    pub doubling: Vec<Option<f64>>,
    pub lost_mass: f64,
    pub potential: Option<PotentialSamples>,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("blow-up radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// Builds the normalized blow-up iterates of `source` at `q`. Each local
/// measure is discretized into about `resolution` atoms. Fails with
/// `UnresolvedScale` at the first radius whose mass is consistent with zero.
pub fn blowup(source: &dyn MeasureSource, q: &Point, radii: &[f64], resolution: usize) -> Result<BlowupRecord> {
    check_radii(radii)?;
    let mut masses = Vec::with_capacity(radii.len());
    let mut measures = Vec::with_capacity(radii.len());
    let mut unit_masses = Vec::with_capacity(radii.len());
    for &r in radii {
        let m = source.ball_mass(q, r)?;
        if !m.resolved() {
            return Err(Error::UnresolvedScale {
                radius: r,
                mass: m.mass,
                std_error: m.std_error,
            });
        }
        let local = source.local_measure(q, r, resolution)?;
        let omega = local.rescale(q, r)?.scaled(1.0 / m.mass);
        unit_masses.push(omega.mass());
        masses.push(m);
        measures.push(omega);
    }
    let unit = Ball::new(Point::ZERO, 1.0)?;
    let last = measures.last().expect("radii is nonempty");
    let support_hausdorff = measures
        .iter()
        .map(|m| support_hausdorff(m, last, &unit))
        .collect::<Result<Vec<_>>>()?;
    let doubling = (0..radii.len())
        .map(|j| {
            let next = radii.get(j + 1)?;
            ((next / radii[j] - 0.5).abs() < 1e-12).then(|| masses[j].mass / masses[j + 1].mass)
        })
        .collect();
    Ok(BlowupRecord {
        q: *q,
        dim: source.dim(),
        radii: radii.to_vec(),
        masses,
        measures,
        unit_masses,
        support_hausdorff,
        doubling,
        lost_mass: source.lost_mass(),
        potential: None,
    })
}

/// Grid of spacing `2 / grid` inside the open unit ball.
pub fn unit_ball_grid(dim: usize, grid: usize) -> Vec<Point> {
    let h = 2.0 / grid as f64;
    let c = |i: usize| -1.0 + h * (i as f64 + 0.5);
    let mut out = Vec::new();
    let nz = if dim == 3 { grid } else { 1 };
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..nz {
                let z = if dim == 3 { c(k) } else { 0.0 };
                let p = Point::new3(c(i), c(j), z);
                if p.norm() < 1.0 {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Samples `u⁺_j - u⁻_j` on `unit_ball_grid(dim, grid)`. The minus side is
/// normalized by its own masses, which must cover the same radii.
pub fn attach_potential(
    record: &mut BlowupRecord,
    u_plus: &dyn PotentialField,
    minus: Option<(&dyn PotentialField, &[MassEstimate])>,
    grid: usize,
) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidArgument("potential grid needs at least 2 cells per axis".into()));
    }
    if let Some((_, m)) = minus {
        if m.len() != record.radii.len() {
            return Err(Error::InvalidArgument("minus-side masses do not match the radii".into()));
        }
    }
    let dim = record.dim;
    let points = unit_ball_grid(dim, grid);
    let mut values = Vec::with_capacity(record.radii.len());
    let mut errors = Vec::with_capacity(record.radii.len());
    for (j, &r) in record.radii.iter().enumerate() {
        let factor = r.powi(dim as i32 - 2);
        let mut vj = Vec::with_capacity(points.len());
        let mut ej = Vec::with_capacity(points.len());
        for x in &points {
            let y = record.q + *x * r;
            let (a, sa) = u_plus.value(&y)?;
            let norm = factor / record.masses[j].mass;
            let (mut v, mut e) = (a * norm, sa * norm);
            if let Some((um, masses)) = minus {
                let (b, sb) = um.value(&y)?;
                let norm = factor / masses[j].mass;
                v -= b * norm;
                e = e.hypot(sb * norm);
            }
            vj.push(v);
            ej.push(e);
        }
        values.push(vj);
        errors.push(ej);
    }
    record.potential = Some(PotentialSamples { points, values, errors });
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    /// Degree actually used; below the requested one after a reduction.
    pub degree: u32,
    pub reduced: bool,
    /// Singular value ratio of the design matrix at the final degree.
    pub condition: f64,
    /// Best fit at each scale.
    pub polynomials: Vec<HarmonicPolynomial>,
    /// Relative L² residual at each scale.
    pub residuals: Vec<f64>,
    /// `degree_norms[j][k]`: Euclidean norm of the degree-`k` coefficients.
    pub degree_norms: Vec<Vec<f64>>,
}

impl PolynomialFit {
    /// Fit at the finest scale.
    pub fn polynomial(&self) -> &HarmonicPolynomial {
        self.polynomials.last().expect("at least one scale")
    }

    /// Residuals never increase by more than `slack` from one scale to the next.
    pub fn residual_decreasing(&self, slack: f64) -> bool {
        self.residuals.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// Condition number above which the degree is reduced.
pub const MAX_CONDITION: f64 = 1e12;

/// Least-squares fit of each `u_j` over harmonic polynomials of degree at most
/// `max_degree`, by SVD of the design matrix on the unit-ball grid.
pub fn blowup_polynomial_fit(record: &BlowupRecord, max_degree: u32) -> Result<PolynomialFit> {
    let samples = record
        .potential
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("blow-up record carries no potential samples".into()))?;
    let dim = record.dim;
    let mut degree = max_degree;
    let (basis, labels, svd, condition) = loop {
        let mut basis = Vec::new();
        let mut labels = Vec::new();
        for k in 0..=degree {
            for b in harmonic_basis(dim, k) {
                basis.push(b);
                labels.push(k);
            }
        }
        let a = DMatrix::from_fn(samples.points.len(), basis.len(), |i, j| basis[j].eval(&samples.points[i]));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition <= MAX_CONDITION || degree == 0 {
            break (basis, labels, svd, condition);
        }
        degree -= 1;
    };
    let mut polynomials = Vec::new();
    let mut residuals = Vec::new();
    let mut degree_norms = Vec::new();
    for values in &samples.values {
        let b = DVector::from_column_slice(values);
        let c = svd
            .solve(&b, 0.0)
            .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
        let mut p = Polynomial::zero(dim);
        let mut norms = vec![0.0f64; degree as usize + 1];
        for (j, bj) in basis.iter().enumerate() {
            p = p.add(&bj.polynomial().scale(c[j]));
            norms[labels[j] as usize] = norms[labels[j] as usize].hypot(c[j]);
        }
        let fitted: Vec<f64> = samples.points.iter().map(|x| p.eval(x)).collect();
        let res = fitted.iter().zip(values).map(|(f, v)| (f - v).powi(2)).sum::<f64>().sqrt();
        let size = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        residuals.push(if size > 0.0 { res / size } else { res });
        polynomials.push(HarmonicPolynomial::new(p, 1e-9)?);
        degree_norms.push(norms);
    }
    Ok(PolynomialFit {
        degree,
        reduced: degree < max_degree,
        condition,
        polynomials,
        residuals,
        degree_norms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FlatnessVerdict {
    /// Decreasing within tolerance and below the threshold at the finest scale.
    Flat,
    /// Above the threshold at every scale.
    NonFlat,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessProfile {
    pub q: Point,
    pub radii: Vec<f64>,
    /// `d_1(ω_j, F)`.
    pub distances: Vec<f64>,
    /// Discretization tolerance of each distance.
    pub tolerances: Vec<f64>,
    pub threshold: f64,
    pub verdict: FlatnessVerdict,
}

/// Threshold separating flat from non-flat blow-ups.
pub const FLATNESS_THRESHOLD: f64 = 0.05;

/// `d_1(ω_j, F)` for every iterate of a blow-up record.
pub fn flatness_of(record: &BlowupRecord) -> FlatnessProfile {
    let search = FlatSearch::default();
    let fits: Vec<_> = record.measures.iter().map(|m| dist_to_flat_with(m, 1.0, &search)).collect();
    let distances: Vec<f64> = fits.iter().map(|f| f.distance).collect();
    let tolerances: Vec<f64> = fits.iter().map(|f| f.tolerance).collect();
    let t = FLATNESS_THRESHOLD;
    let decreasing = distances
        .windows(2)
        .zip(tolerances.windows(2))
        .all(|(d, e)| d[1] <= d[0] + e[0] + e[1]);
    let verdict = if decreasing && *distances.last().unwrap() <= t {
        FlatnessVerdict::Flat
    } else if distances.iter().all(|d| *d > t) {
        FlatnessVerdict::NonFlat
    } else {
        FlatnessVerdict::Undetermined
    };
    FlatnessProfile {
        q: record.q,
        radii: record.radii.clone(),
        distances,
        tolerances,
        threshold: t,
        verdict,
    }
}

/// Blow-up followed by `d_1(ω_j, F)` at every radius.
pub fn flatness_profile(source: &dyn MeasureSource, q: &Point, radii: &[f64], resolution: usize) -> Result<FlatnessProfile> {
    Ok(flatness_of(&blowup(source, q, radii, resolution)?))
}
