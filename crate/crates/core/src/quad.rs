//! Adaptive Gauss-Kronrod (7/15) quadrature on intervals.

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> QuadResult {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        // odd Kronrod nodes 1, 3, 5 coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    QuadResult {
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until the summed
/// error estimate falls below `max(abs_tol, rel_tol * |value|)` or the panel
/// budget is spent.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0 };
    }
    let mut panels = vec![(a, b, gk15(&mut f, a, b))];
    loop {
        let value: f64 = panels.iter().map(|p| p.2.value).sum();
        let error: f64 = panels.iter().map(|p| p.2.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= max_panels {
            return QuadResult { value, error };
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .map(|(i, _)| i)
            .unwrap();
        let (pa, pb, _) = panels.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            return QuadResult { value, error };
        }
        panels.push((pa, m, gk15(&mut f, pa, m)));
        panels.push((m, pb, gk15(&mut f, m, pb)));
    }
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    let pieces = knots.len() - 1;
    let mut total = QuadResult { value: 0.0, error: 0.0 };
    for w in knots.windows(2) {
        let r = integrate(
            &mut f,
            w[0],
            w[1],
            abs_tol / pieces as f64,
            rel_tol,
            max_panels,
        );
        total.value += r.value;
        total.error += r.error;
    }
    total
}
