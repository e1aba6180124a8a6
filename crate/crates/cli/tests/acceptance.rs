//! Acceptance suite. Each criterion prints one PASS/FAIL line with the
//! measured numbers; the process exits nonzero if any criterion fails.
//!
//! Run with `cargo test -p harmlab-cli --test acceptance`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use harmlab_core::analysis::{
    beurling_check, flatness_profile, gamma_profile, local_dimension, theta_density, KernelSource, PolynomialPart,
    QuadSpec, WalkSource, ZeroSetSource,
};
use harmlab_core::domain::{beta_infty, boundary_sample, koch_snowflake, make_domain, Domain, DomainSpec, Side};
use harmlab_core::harmonic::{equal_arcs, wos_measure, Cell, HarmonicPolynomial, WalkConfig};
use harmlab_core::measure::{f_dist, flat_sample, FlatMeasureSpec};
use harmlab_core::rng::mix64;
use harmlab_core::{Ball, DiscreteMeasure, Point};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 2f64.powi(-j)).collect()
}

fn disc() -> Domain {
    make_domain(&DomainSpec::Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
        side: Side::Interior,
    })
    .unwrap()
}

fn half_plane() -> Domain {
    make_domain(&DomainSpec::HalfSpace {
        normal: vec![0.0, 1.0],
        offset: 0.0,
        side: Side::Interior,
    })
    .unwrap()
}

fn unit_square() -> Domain {
    make_domain(&DomainSpec::Polygon {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        side: Side::Interior,
    })
    .unwrap()
}

fn saddle_domain() -> Domain {
    make_domain(&DomainSpec::PolyZeroSet {
        polynomial: HarmonicPolynomial::saddle(),
        sign: 1,
    })
    .unwrap()
}

/// Uniform variates from a counter.
struct Uniform(u64);

impl Uniform {
    fn next(&mut self) -> f64 {
        self.0 += 1;
        (mix64(self.0) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn measure(&mut self, dim: usize) -> DiscreteMeasure {
        let n = 1 + (self.next() * 12.0) as usize;
        let mut pts = Vec::new();
        let mut w = Vec::new();
        for _ in 0..n {
            let mut p = Point::ZERO;
            for i in 0..dim {
                p[i] = 4.0 * self.next() - 2.0;
            }
            pts.push(p);
            w.push(0.1 + 2.0 * self.next());
        }
        DiscreteMeasure::new(dim, pts, w).unwrap()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn wos_oracle() -> Outcome {
    let n = 100_000u64;
    let arcs = equal_arcs(Point::ZERO, 1.0, 16);
    let est = wos_measure(&disc(), &Point::ZERO, &arcs, &WalkConfig::for_domain(&disc(), n, 1)).unwrap();
    let p0 = 1.0 / 16.0;
    let se = (p0 * (1.0 - p0) / n as f64).sqrt();
    let within = est.probabilities.iter().filter(|p| (*p - p0).abs() <= 3.0 * se).count();
    let cell = [Cell::Ball {
        center: Point::ZERO,
        radius: 1.0,
    }];
    let hp = half_plane();
    let h = wos_measure(&hp, &Point::new2(0.0, 1.0), &cell, &WalkConfig::for_domain(&hp, n, 2)).unwrap();
    let hse = (0.25 / n as f64).sqrt();
    let z = (h.probabilities[0] - 0.5).abs() / hse;
    outcome(
        within >= 15 && z <= 3.0,
        format!("{within}/16 arcs within 3σ; half-plane cell {:.5} ({z:.2}σ)", h.probabilities[0]),
    )
}

fn metric_identities() -> Outcome {
    let mut u = Uniform(1000);
    let mut worst_scale: f64 = 0.0;
    for k in 0..100 {
        let dim = 2 + k % 2;
        let mu = u.measure(dim);
        let mut x = Point::ZERO;
        for i in 0..dim {
            x[i] = 2.0 * u.next() - 1.0;
        }
        let r = 0.2 + 3.0 * u.next();
        let lhs = mu.f_norm_ball(&Ball::new(x, r).unwrap());
        let rhs = r * mu.rescale(&x, r).unwrap().f_norm(1.0);
        worst_scale = worst_scale.max((lhs - rhs).abs() / lhs.abs().max(1e-12));
    }
    let mut worst_sym: f64 = 0.0;
    let mut worst_tri: f64 = 0.0;
    for k in 0..100 {
        let dim = 2 + k % 2;
        let (a, b, c) = (u.measure(dim), u.measure(dim), u.measure(dim));
        let s = 0.5 + 1.5 * u.next();
        let ab = f_dist(&a, &b, s);
        let ba = f_dist(&b, &a, s);
        let bc = f_dist(&b, &c, s);
        let ac = f_dist(&a, &c, s);
        let scale = ab.max(ba).max(1e-12);
        worst_sym = worst_sym.max((ab - ba).abs() / scale);
        worst_tri = worst_tri.max((ac - ab - bc) / ac.max(1e-12));
    }
    outcome(
        worst_scale <= 1e-9 && worst_sym <= 1e-9 && worst_tri <= 1e-9,
        format!("scaling {worst_scale:.1e}, symmetry {worst_sym:.1e}, triangle excess {worst_tri:.1e}"),
    )
}

fn flat_calculus() -> Outcome {
    let n = 1000;
    let line = flat_sample(&FlatMeasureSpec::new(2, Point::new2(0.0, 1.0), 1.0).unwrap(), 1.0, n).unwrap();
    // every atom sits within half a cell of the mass it stands for, and the
    // integrand is 1-Lipschitz: error at most mass * h / 2 with h = 2/n
    let bound = 2.0 * (1.0 / n as f64);
    let f1 = line.f_norm(1.0);
    let mut pass = (f1 - 1.0).abs() <= bound;
    let mut detail = format!("F_1(line) = {f1:.6} (bound {bound:.0e})");
    for (dim, count) in [(2usize, 200_000usize), (3, 400_000)] {
        let normal = if dim == 2 { Point::new2(0.0, 1.0) } else { Point::new3(0.0, 0.0, 1.0) };
        let mu = flat_sample(&FlatMeasureSpec::new(dim, normal, 1.0).unwrap(), 4.0, count).unwrap();
        let f = mu.f_norm(1.0);
        for tau in [2.0f64, 4.0] {
            let ratio = mu.f_norm(tau) / f;
            let e = rel(ratio, tau.powi(dim as i32));
            pass &= e < 0.01;
            detail += &format!("; n={dim} τ={tau}: {ratio:.4}");
        }
    }
    outcome(pass, detail)
}

/// Lower bound for the distance of the normalized cross measure `ω_h`,
/// `h = x² - y²`, to the flat cone at unit scale.
///
/// For each orientation `θ` of the flat `Ψ_θ` (density 1 on a line, unit
/// `F_1`) and each test function `φ = min(δ - dist(x, ℓ), 1 - |x|)⁺` with `ℓ`
/// one of the cross lines, `|∫φ dμ - ∫φ dΨ_θ|` bounds the distance from
/// below. The best bound over the family is 1-Lipschitz in `θ`, so its
/// minimum over a grid less half the grid step bounds the infimum over all
/// lines.
fn cross_flatness_floor() -> f64 {
    let nodes = 20_000;
    let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        let h = (b - a) / nodes as f64;
        let inner: f64 = (1..nodes).map(|k| f(a + h * k as f64)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    };
    let phi = |x: Point, dir: Point, delta: f64| {
        let d = (x.x() * dir.y() - x.y() * dir.x()).abs();
        (delta - d).min(1.0 - x.norm()).max(0.0)
    };
    let rays = [
        Point::new2(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        Point::new2(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        Point::new2(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        Point::new2(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    ];
    // |∇h| = 2t along each ray; F_1 of the four rays is 4/3
    let density = |t: f64| 1.5 * t;
    let deltas = [0.1, 0.2, 0.3, 0.5, 0.7];
    let mut mu_terms = Vec::new();
    for line in [rays[0], rays[2]] {
        for &delta in &deltas {
            let m: f64 = rays
                .iter()
                .map(|u| integrate(&|t| density(t) * phi(*u * t, line, delta), 0.0, 1.0))
                .sum();
            mu_terms.push((line, delta, m));
        }
    }
    let n_theta = 1800;
    let step = PI / n_theta as f64;
    let mut floor = f64::INFINITY;
    for k in 0..n_theta {
        let th = step * k as f64;
        let e = Point::new2(th.cos(), th.sin());
        let best = mu_terms
            .iter()
            .map(|&(line, delta, m)| (m - integrate(&|t| phi(e * t, line, delta), -1.0, 1.0)).abs())
            .fold(0.0, f64::max);
        floor = floor.min(best);
    }
    floor - 0.5 * step - 1e-6
}

fn flatness_dichotomy() -> Outcome {
    let radii = [16.0, 8.0, 4.0, 2.0, 1.0];
    let mut pass = true;
    let mut detail = String::new();
    for normal in [Point::new2(0.0, 1.0), Point::new2(1.0, 2.0) / 5f64.sqrt()] {
        let src = ZeroSetSource::new(HarmonicPolynomial::linear(2, &normal));
        let p = flatness_profile(&src, &Point::ZERO, &radii, 400).unwrap();
        let worst = p.distances.iter().cloned().fold(0.0, f64::max);
        pass &= worst <= 0.05;
        detail += &format!("linear max {worst:.4}; ");
    }
    let floor = cross_flatness_floor();
    let p = flatness_profile(&ZeroSetSource::new(HarmonicPolynomial::saddle()), &Point::ZERO, &radii, 400).unwrap();
    let lo = p.distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = p.distances.iter().cloned().fold(0.0, f64::max);
    pass &= lo >= floor && (hi - lo) / lo < 0.1;
    detail += &format!("saddle in [{lo:.4}, {hi:.4}], floor {floor:.4}");
    outcome(pass, detail)
}

fn acf_monotonicity() -> Outcome {
    let radii = [0.25, 0.5, 1.0, 2.0, 4.0];
    let spec = QuadSpec::default();
    let lin = HarmonicPolynomial::linear(2, &Point::new2(0.0, 1.0));
    let g = gamma_profile(
        &PolynomialPart::positive(lin.clone()),
        &PolynomialPart::negative(lin),
        &Point::ZERO,
        &radii,
        &spec,
    )
    .unwrap();
    let target = PI * PI / 4.0;
    let lin_err = g.gamma.iter().map(|v| rel(*v, target)).fold(0.0, f64::max);
    let spread = g.gamma.iter().cloned().fold(0.0, f64::max) / g.gamma.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let s = HarmonicPolynomial::saddle();
    let g2 = gamma_profile(
        &PolynomialPart::positive(s.clone()),
        &PolynomialPart::negative(s),
        &Point::ZERO,
        &radii,
        &spec,
    )
    .unwrap();
    let sad_err = g2
        .gamma
        .iter()
        .zip(&radii)
        .map(|(v, r)| rel(*v, PI * PI * r.powi(4)))
        .fold(0.0, f64::max);
    let increasing = g2.gamma.windows(2).all(|w| w[1] > w[0]);
    outcome(
        lin_err < 0.01 && spread < 0.01 && sad_err < 0.02 && increasing,
        format!("linear rel err {lin_err:.1e}, spread {spread:.1e}; saddle rel err {sad_err:.1e}, increasing {increasing}"),
    )
}

fn beurling_square() -> Outcome {
    let sq = unit_square();
    let n = 200_000;
    let plus = WalkSource::new(&sq, &Point::new2(0.5, 0.5), &WalkConfig::for_domain(&sq, n, 3)).unwrap();
    let comp = sq.complement();
    let minus = WalkSource::new(&comp, &Point::new2(0.5, -0.5), &WalkConfig::for_domain(&comp, n, 4)).unwrap();
    let p = beurling_check(&plus, &minus, &Point::new2(0.5, 0.0), &dyadic(2, 6), 4.0, None).unwrap();
    let products: Vec<String> = p.products.iter().map(|v| format!("{v:.3}")).collect();
    outcome(
        p.bounded == Some(true) && p.spread <= 4.0,
        format!("products [{}], spread {:.3}", products.join(", "), p.spread),
    )
}

fn blowup_flatness() -> Outcome {
    let radii = dyadic(1, 8);
    let d = KernelSource::new(disc(), Point::ZERO).unwrap();
    let pd = flatness_profile(&d, &Point::new2(1.0, 0.0), &radii, 400).unwrap();
    let last = *pd.distances.last().unwrap();
    let first = pd.distances[0];
    let h = KernelSource::new(half_plane(), Point::new2(0.0, 1.0)).unwrap();
    let ph = flatness_profile(&h, &Point::ZERO, &radii, 400).unwrap();
    let hmax = ph.distances.iter().cloned().fold(0.0, f64::max);
    outcome(
        last < 0.05 && last < first && hmax <= 0.02,
        format!("disc {first:.4} -> {last:.4}; half-plane max {hmax:.4}"),
    )
}

fn dimension_slopes() -> Outcome {
    let d = KernelSource::new(disc(), Point::new2(0.3, 0.2)).unwrap();
    let fd = local_dimension(&d, &Point::new2(0.0, -1.0), 1e-4, 1e-1, 8).unwrap();
    let angle = PI / 2.0;
    let wedge = make_domain(&DomainSpec::Wedge {
        apex: [0.0, 0.0],
        direction: PI / 4.0,
        opening: angle,
        side: Side::Interior,
    })
    .unwrap();
    let w = WalkSource::new(&wedge, &Point::new2(1.0, 1.0), &WalkConfig::for_domain(&wedge, 200_000, 5)).unwrap();
    let fw = local_dimension(&w, &Point::ZERO, 0.05, 0.8, 6).unwrap();
    let fs = local_dimension(&ZeroSetSource::new(HarmonicPolynomial::saddle()), &Point::ZERO, 0.01, 1.0, 5).unwrap();
    outcome(
        (fd.slope - 1.0).abs() <= 0.05 && (fw.slope - PI / angle).abs() <= 0.1 && (fs.slope - 2.0).abs() <= 1e-3,
        format!("disc {:.4}, wedge corner {:.4}, saddle {:.6}", fd.slope, fw.slope, fs.slope),
    )
}

fn beta_numbers() -> Outcome {
    let sq = unit_square();
    let edge = [0.2, 0.1, 0.05, 0.01]
        .iter()
        .map(|r| beta_infty(&sq, &Point::new2(0.5, 0.0), *r).unwrap())
        .fold(0.0, f64::max);
    let side = 1.0;
    let koch = make_domain(&DomainSpec::KochSnowflake {
        level: 4,
        side_length: side,
        center: [0.0, 0.0],
        side: Side::Interior,
    })
    .unwrap();
    let poly = koch_snowflake(4, side, Point::ZERO).unwrap();
    let level0 = koch_snowflake(0, side, Point::ZERO).unwrap();
    let v = poly.vertices()[0];
    assert!(level0.vertices().iter().any(|w| w.dist(&v) < 1e-12), "first vertex is a triangle corner");
    let koch_min = (1..=4)
        .map(|k| beta_infty(&koch, &v, side * 3f64.powi(-k)).unwrap())
        .fold(f64::INFINITY, f64::min);
    let cross = beta_infty(&saddle_domain(), &Point::ZERO, 1.0).unwrap();
    outcome(
        edge <= 0.01 && koch_min >= 0.05 && (cross - FRAC_1_SQRT_2).abs() <= 0.01,
        format!("edge max {edge:.2e}, Koch vertex min {koch_min:.4}, cross {cross:.4}"),
    )
}

fn theta_densities() -> Outcome {
    let flat = boundary_sample(&half_plane(), &Ball::new(Point::ZERO, 1.0).unwrap(), 2000, 0).unwrap();
    let tf = theta_density(&flat, &Point::new2(0.1, 0.0), 0.5).unwrap();
    let cross = boundary_sample(&saddle_domain(), &Ball::new(Point::ZERO, 1.0).unwrap(), 4000, 0).unwrap();
    let tc = theta_density(&cross, &Point::ZERO, 0.5).unwrap();
    outcome(
        (tf.value - 1.0).abs() <= 0.02 && (tc.value - 2.0).abs() <= 0.04 && !tf.insufficient && !tc.insufficient,
        format!("flat {:.4}, cross {:.4}", tf.value, tc.value),
    )
}

fn reproducibility() -> Outcome {
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let tmp = tempfile::TempDir::new().unwrap();
    let mut compared = 0;
    let mut diffs = Vec::new();
    for name in ["disc", "halfplane", "wedge", "square", "saddle"] {
        let cfg = examples.join(format!("{name}.json"));
        let dirs = [tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b"))];
        for d in &dirs {
            let out = Command::new(env!("CARGO_BIN_EXE_harmlab"))
                .args(["run", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()])
                .output()
                .unwrap();
            if !out.status.success() {
                return outcome(false, format!("{name} run failed: {}", String::from_utf8_lossy(&out.stderr)));
            }
        }
        for entry in std::fs::read_dir(&dirs[0]).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                let file = path.file_name().unwrap();
                compared += 1;
                if std::fs::read(&path).unwrap() != std::fs::read(dirs[1].join(file)).unwrap() {
                    diffs.push(format!("{name}/{}", file.to_string_lossy()));
                }
            }
        }
    }
    outcome(
        diffs.is_empty() && compared > 0,
        format!("{compared} CSV files compared, {} differ {diffs:?}", diffs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("walk-on-spheres oracle agreement", wos_oracle),
        ("metric identities", metric_identities),
        ("flat-measure calculus", flat_calculus),
        ("flatness dichotomy", flatness_dichotomy),
        ("ACF monotonicity", acf_monotonicity),
        ("Beurling boundedness", beurling_square),
        ("blow-up flatness", blowup_flatness),
        ("dimension estimator", dimension_slopes),
        ("beta numbers", beta_numbers),
        ("theta density", theta_densities),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !res.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} ({:.1}s)",
            if res.pass { "PASS" } else { "FAIL" },
            i + 1,
            res.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
