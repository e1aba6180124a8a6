//! Finite-scale classification of a boundary point: the trend of
//! `ω⁻(B(Q,r)) / ω⁺(B(Q,r))`, the density `ω(B(Q,r)) / r^{n-1}`, and the
//! flatness of blow-ups.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blowup::{flatness_profile, FlatnessProfile, FlatnessVerdict};
use super::source::{MassEstimate, MeasureSource};
use crate::error::{Error, Result};
use crate::geom::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaVerdict {
    /// Ratio converges to a positive finite value.
    Lambda1,
    /// Ratio diverges as `r → 0`.
    Lambda2,
    /// Ratio tends to zero.
    Lambda3,
    /// Ratio oscillates beyond its error bars.
    Lambda4,
    Undetermined,
}

impl LambdaVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            LambdaVerdict::Lambda1 => "L1",
            LambdaVerdict::Lambda2 => "L2",
            LambdaVerdict::Lambda3 => "L3",
            LambdaVerdict::Lambda4 => "L4",
            LambdaVerdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Fewer resolved scales give `Undetermined`.
    pub min_scales: usize,
    /// `|slope|` of `log ratio` against `log r` below which the ratio counts
    /// as convergent; also the largest slope error that still allows a verdict.
    pub slope: f64,
    /// Median crossings needed for an oscillation verdict.
    pub crossings: usize,
    /// Each counted swing exceeds this many error bars.
    pub swing: f64,
    /// Swings smaller than this fraction of the median are ignored.
    pub swing_floor: f64,
    /// Relative oscillation of the ratio over the finest two scales below
    /// which the Lebesgue-point proxy holds.
    pub oscillation: f64,
    /// Density bracket `[1/T, T]`.
    pub density_bracket: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_scales: 4,
            slope: 0.1,
            crossings: 3,
            swing: 3.0,
            swing_floor: 1e-6,
            oscillation: 0.05,
            density_bracket: 1e3,
        }
    }
}

/// Weighted least-squares line `y = a + b x`; returns `(b, a, σ_b, rms)`.
/// Unit weights when every error is zero, and then `σ_b` is estimated from
/// the residuals.
pub(crate) fn line_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> (f64, f64, f64, f64) {
    let exact = sigma.iter().all(|s| *s == 0.0);
    let w: Vec<f64> = sigma
        .iter()
        .map(|s| if exact { 1.0 } else { 1.0 / s.max(1e-300).powi(2) })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let res: Vec<f64> = x.iter().zip(y).map(|(x, y)| y - a - b * x).collect();
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    let sb = if exact {
        let dof = (x.len() as f64 - 2.0).max(1.0);
        (res.iter().map(|r| r * r).sum::<f64>() / dof / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    (b, a, sb, rms)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub verdict: LambdaVerdict,
    /// Slope of `log ratio` against `log r` and its error.
    pub slope: f64,
    pub slope_error: f64,
    /// `dω⁻/dω⁺(Q)` estimate for `Lambda1`: the ratio at the finest scale.
    pub h: Option<f64>,
    pub crossings: usize,
    /// Radii range the verdict used.
    pub r_min: f64,
    pub r_max: f64,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaProxy {
    /// `|ρ_finest - ρ_next| / ρ_finest`.
    pub oscillation: f64,
    pub threshold: f64,
    pub member: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityVerdict {
    /// Density bounded above and below across scales.
    Good,
    /// Density decreasing toward zero.
    Bad,
    Undetermined,
}

impl DensityVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DensityVerdict::Good => "good",
            DensityVerdict::Bad => "bad",
            DensityVerdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub q: Point,
    pub radii: Vec<f64>,
    /// `ω(B(Q,r)) / r^{n-1}`.
    pub densities: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `log density` against `log r`.
    pub slope: f64,
    pub slope_error: f64,
    pub bracket: f64,
    pub verdict: DensityVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub q: Point,
    /// Decreasing.
    pub radii: Vec<f64>,
    pub mass_plus: Vec<MassEstimate>,
    pub mass_minus: Vec<MassEstimate>,
    /// `ω⁻(B) / ω⁺(B)`; `NaN` where either mass is unresolved.
    pub ratio: Vec<f64>,
    pub ratio_errors: Vec<f64>,
    pub lambda: LambdaFit,
    pub gamma: Option<GammaProxy>,
    pub flatness: Option<FlatnessProfile>,
    pub density: Option<DensityProfile>,
    pub thresholds: Thresholds,
}

impl ClassificationRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

fn check_scales(radii: &[f64]) -> Result<()> {
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("scales must be strictly decreasing".into()));
    }
    Ok(())
}

/// Trend of the ratio profile at `q` over decreasing `radii`.
pub fn classify_lambda(
    plus: &dyn MeasureSource,
    minus: &dyn MeasureSource,
    q: &Point,
    radii: &[f64],
    t: &Thresholds,
) -> Result<ClassificationRecord> {
    check_scales(radii)?;
    let mass_plus = radii.iter().map(|&r| plus.ball_mass(q, r)).collect::<Result<Vec<_>>>()?;
    let mass_minus = radii.iter().map(|&r| minus.ball_mass(q, r)).collect::<Result<Vec<_>>>()?;
    let mut ratio = Vec::new();
    let mut ratio_errors = Vec::new();
    for (a, b) in mass_plus.iter().zip(&mass_minus) {
        if a.resolved() && b.resolved() {
            let rho = b.mass / a.mass;
            ratio.push(rho);
            ratio_errors.push(rho * (a.std_error / a.mass).hypot(b.std_error / b.mass));
        } else {
            ratio.push(f64::NAN);
            ratio_errors.push(f64::NAN);
        }
    }
    let used: Vec<usize> = (0..radii.len()).filter(|&i| ratio[i].is_finite()).collect();
    let undetermined = |reason: String| LambdaFit {
        verdict: LambdaVerdict::Undetermined,
        slope: f64::NAN,
        slope_error: f64::NAN,
        h: None,
        crossings: 0,
        r_min: radii.last().copied().unwrap_or(f64::NAN),
        r_max: radii.first().copied().unwrap_or(f64::NAN),
        reason: Some(reason),
    };
    let (lambda, gamma) = if used.len() < t.min_scales {
        (
            undetermined(format!("{} resolved scales, {} needed", used.len(), t.min_scales)),
            None,
        )
    } else {
        let x: Vec<f64> = used.iter().map(|&i| radii[i].ln()).collect();
        let y: Vec<f64> = used.iter().map(|&i| ratio[i].ln()).collect();
        let s: Vec<f64> = used.iter().map(|&i| ratio_errors[i] / ratio[i]).collect();
        let (slope, _, slope_error, _) = line_fit(&x, &y, &s);
        let vals: Vec<f64> = used.iter().map(|&i| ratio[i]).collect();
        let med = median(&vals);
        let mut signs = Vec::new();
        for &i in &used {
            let dev = ratio[i] - med;
            if dev.abs() > t.swing * ratio_errors[i] && dev.abs() > t.swing_floor * med.abs() {
                signs.push(dev.signum());
            }
        }
        let crossings = signs.windows(2).filter(|w| w[0] != w[1]).count();
        let finest = *used.last().unwrap();
        let (verdict, reason) = if crossings >= t.crossings {
            (LambdaVerdict::Lambda4, None)
        } else if !(slope_error <= t.slope) {
            (LambdaVerdict::Undetermined, Some(format!("slope error {slope_error} exceeds {}", t.slope)))
        } else if slope.abs() <= t.slope {
            (LambdaVerdict::Lambda1, None)
        } else if slope < 0.0 {
            (LambdaVerdict::Lambda2, None)
        } else {
            (LambdaVerdict::Lambda3, None)
        };
        let prev = used[used.len() - 2];
        let oscillation = (ratio[finest] - ratio[prev]).abs() / ratio[finest];
        (
            LambdaFit {
                verdict,
                slope,
                slope_error,
                h: (verdict == LambdaVerdict::Lambda1).then_some(ratio[finest]),
                crossings,
                r_min: radii[finest],
                r_max: radii[used[0]],
                reason,
            },
            Some(GammaProxy {
                oscillation,
                threshold: t.oscillation,
                member: oscillation <= t.oscillation,
            }),
        )
    };
    Ok(ClassificationRecord {
        q: *q,
        radii: radii.to_vec(),
        mass_plus,
        mass_minus,
        ratio,
        ratio_errors,
        lambda,
        gamma,
        flatness: None,
        density: None,
        thresholds: *t,
    })
}

/// Trend of `ω(B(Q,r)) / r^{n-1}` over decreasing `radii`.
pub fn gb_classify(source: &dyn MeasureSource, q: &Point, radii: &[f64], t: &Thresholds) -> Result<DensityProfile> {
    check_scales(radii)?;
    let k = source.dim() as i32 - 1;
    let masses = radii.iter().map(|&r| source.ball_mass(q, r)).collect::<Result<Vec<_>>>()?;
    let densities: Vec<f64> = masses.iter().zip(radii).map(|(m, r)| m.mass / r.powi(k)).collect();
    let errors: Vec<f64> = masses.iter().zip(radii).map(|(m, r)| m.std_error / r.powi(k)).collect();
    let used: Vec<usize> = (0..radii.len()).filter(|&i| masses[i].resolved()).collect();
    let mut profile = DensityProfile {
        q: *q,
        radii: radii.to_vec(),
        densities,
        errors,
        slope: f64::NAN,
        slope_error: f64::NAN,
        bracket: t.density_bracket,
        verdict: DensityVerdict::Undetermined,
    };
    if used.len() < t.min_scales {
        return Ok(profile);
    }
    let x: Vec<f64> = used.iter().map(|&i| radii[i].ln()).collect();
    let y: Vec<f64> = used.iter().map(|&i| profile.densities[i].ln()).collect();
    let s: Vec<f64> = used.iter().map(|&i| profile.errors[i] / profile.densities[i]).collect();
    let (slope, _, slope_error, _) = line_fit(&x, &y, &s);
    profile.slope = slope;
    profile.slope_error = slope_error;
    let inside = used
        .iter()
        .all(|&i| (1.0 / t.density_bracket..=t.density_bracket).contains(&profile.densities[i]));
    profile.verdict = if slope_error > t.slope {
        DensityVerdict::Undetermined
    } else if slope > t.slope {
        DensityVerdict::Bad
    } else if inside && slope.abs() <= t.slope {
        DensityVerdict::Good
    } else {
        DensityVerdict::Undetermined
    };
    Ok(profile)
}

/// Which analyses [`classify_point`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub flatness: bool,
    pub density: bool,
    /// Atoms per local measure for the flatness profile.
    pub resolution: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            flatness: true,
            density: true,
            resolution: 400,
        }
    }
}

/// Ratio classification plus the density and flatness profiles of `ω⁺`.
pub fn classify_point(
    plus: &dyn MeasureSource,
    minus: &dyn MeasureSource,
    q: &Point,
    radii: &[f64],
    t: &Thresholds,
    opts: &ClassifyOptions,
) -> Result<ClassificationRecord> {
    let mut rec = classify_lambda(plus, minus, q, radii, t)?;
    if opts.density {
        rec.density = Some(gb_classify(plus, q, radii, t)?);
    }
    if opts.flatness {
        rec.flatness = match flatness_profile(plus, q, radii, opts.resolution) {
            Ok(p) => Some(p),
            Err(Error::UnresolvedScale { .. }) | Err(Error::EmptyMeasure) | Err(Error::EmptySample) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(rec)
}

/// Classifies every point in parallel; output order follows `points`.
pub fn classify_batch(
    plus: &dyn MeasureSource,
    minus: &dyn MeasureSource,
    points: &[Point],
    radii: &[f64],
    t: &Thresholds,
    opts: &ClassifyOptions,
) -> Vec<Result<ClassificationRecord>> {
    points
        .par_iter()
        .map(|q| classify_point(plus, minus, q, radii, t, opts))
        .collect()
}

pub const CSV_HEADER: &str = "q_x,q_y,q_z,radius,mass_plus,mass_plus_err,mass_minus,mass_minus_err,ratio,ratio_err,density,density_err,flatness,flatness_tol,lambda,gamma_member,density_verdict,flatness_verdict";

fn num(out: &mut String, v: f64) {
    if v.is_finite() {
        write!(out, ",{v:?}").unwrap();
    } else {
        out.push(',');
    }
}

/// One row per `(Q, scale)`. Floats use the shortest representation that
/// reads back to the same value; missing values are empty.
pub fn records_to_csv(records: &[ClassificationRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in records {
        for (i, r) in rec.radii.iter().enumerate() {
            write!(out, "{:?},{:?},{:?}", rec.q.x(), rec.q.y(), rec.q.z()).unwrap();
            num(&mut out, *r);
            num(&mut out, rec.mass_plus[i].mass);
            num(&mut out, rec.mass_plus[i].std_error);
            num(&mut out, rec.mass_minus[i].mass);
            num(&mut out, rec.mass_minus[i].std_error);
            num(&mut out, rec.ratio[i]);
            num(&mut out, rec.ratio_errors[i]);
            let (d, de) = rec
                .density
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |p| (p.densities[i], p.errors[i]));
            num(&mut out, d);
            num(&mut out, de);
            let (f, ft) = rec
                .flatness
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |p| (p.distances[i], p.tolerances[i]));
            num(&mut out, f);
            num(&mut out, ft);
            let gamma = rec.gamma.as_ref().map_or("", |g| if g.member { "yes" } else { "no" });
            let dv = rec.density.as_ref().map_or("", |p| p.verdict.label());
            let fv = rec.flatness.as_ref().map_or("", |p| match p.verdict {
                FlatnessVerdict::Flat => "flat",
                FlatnessVerdict::NonFlat => "non_flat",
                FlatnessVerdict::Undetermined => "undetermined",
            });
            writeln!(out, ",{},{gamma},{dv},{fv}", rec.lambda.verdict.label()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::source::{DiscreteSource, KernelSource};
    use crate::domain::{make_domain, Domain, DomainSpec, Side};
    use crate::measure::DiscreteMeasure;
    use std::f64::consts::PI;

    fn dyadic(from: i32, to: i32) -> Vec<f64> {
        (from..=to).map(|j| 2f64.powi(-j)).collect()
    }

    fn half_plane() -> Domain {
        make_domain(&DomainSpec::HalfSpace {
            normal: vec![0.0, 1.0],
            offset: 0.0,
            side: Side::Interior,
        })
        .unwrap()
    }

    fn quarter() -> Domain {
        make_domain(&DomainSpec::Wedge {
            apex: [0.0, 0.0],
            direction: PI / 4.0,
            opening: PI / 2.0,
            side: Side::Interior,
        })
        .unwrap()
    }

    #[test]
    fn symmetric_half_plane_is_lambda1() {
        let up = half_plane();
        let plus = KernelSource::new(up.clone(), Point::new2(0.0, 1.0)).unwrap();
        let minus = KernelSource::new(up.complement(), Point::new2(0.0, -1.0)).unwrap();
        let rec = classify_point(&plus, &minus, &Point::ZERO, &dyadic(1, 6), &Thresholds::default(), &ClassifyOptions::default()).unwrap();
        assert_eq!(rec.lambda.verdict, LambdaVerdict::Lambda1);
        assert!((rec.lambda.h.unwrap() - 1.0).abs() < 1e-12);
        assert!(rec.gamma.as_ref().unwrap().member);
        assert_eq!(rec.density.as_ref().unwrap().verdict, DensityVerdict::Good);
        assert_eq!(rec.flatness.as_ref().unwrap().verdict, FlatnessVerdict::Flat);
        let csv = records_to_csv(&[rec]);
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(1).unwrap().ends_with(",L1,yes,good,flat"));
    }

    #[test]
    fn wedge_corner_orientation() {
        let w = quarter();
        let inner = KernelSource::new(w.clone(), Point::new2(1.0, 1.0)).unwrap();
        let outer = KernelSource::new(w.complement(), Point::new2(-1.0, -1.0)).unwrap();
        let t = Thresholds::default();
        let radii = dyadic(3, 8);
        let rec = classify_lambda(&inner, &outer, &Point::ZERO, &radii, &t).unwrap();
        assert_eq!(rec.lambda.verdict, LambdaVerdict::Lambda2);
        assert!((rec.lambda.slope + 4.0 / 3.0).abs() < 0.05, "{}", rec.lambda.slope);
        let swapped = classify_lambda(&outer, &inner, &Point::ZERO, &radii, &t).unwrap();
        assert_eq!(swapped.lambda.verdict, LambdaVerdict::Lambda3);
        assert_eq!(gb_classify(&inner, &Point::ZERO, &radii, &t).unwrap().verdict, DensityVerdict::Bad);
    }

    #[test]
    fn too_few_scales() {
        let up = half_plane();
        let plus = KernelSource::new(up.clone(), Point::new2(0.0, 1.0)).unwrap();
        let minus = KernelSource::new(up.complement(), Point::new2(0.0, -1.0)).unwrap();
        let rec = classify_lambda(&plus, &minus, &Point::ZERO, &dyadic(1, 3), &Thresholds::default()).unwrap();
        assert_eq!(rec.lambda.verdict, LambdaVerdict::Undetermined);
        assert!(rec.lambda.reason.is_some());
        assert!(classify_lambda(&plus, &minus, &Point::ZERO, &[0.1, 0.2, 0.05, 0.01], &Thresholds::default()).is_err());
    }

    #[test]
    fn oscillating_ratio_is_lambda4() {
        // ω⁺ unit atoms at every 2^{-k}; ω⁻ doubles on alternate shells
        let mut pa = Vec::new();
        let mut pb = Vec::new();
        let mut wb = Vec::new();
        for k in 0..12 {
            let p = Point::new2(1.5 * 2f64.powi(-k - 1), 0.0);
            pa.push(p);
            pb.push(p);
            wb.push(if k % 2 == 0 { 1.0 } else { 4.0 });
        }
        let a = DiscreteSource(DiscreteMeasure::new(2, pa.clone(), vec![1.0; 12]).unwrap());
        let b = DiscreteSource(DiscreteMeasure::new(2, pb, wb).unwrap());
        let rec = classify_lambda(&a, &b, &Point::ZERO, &dyadic(0, 7), &Thresholds::default()).unwrap();
        // cumulative ratios alternate above and below their median
        assert_eq!(rec.lambda.verdict, LambdaVerdict::Lambda4, "{:?}", rec.ratio);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (b, a, sb, rms) = line_fit(&x, &y, &[0.0; 4]);
        assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14);
        assert!(sb < 1e-14 && rms < 1e-14);
    }
}
