use criterion::{black_box, criterion_group, criterion_main, Criterion};
use harmlab_core::domain::{make_domain, DomainSpec, Side};
use harmlab_core::harmonic::{equal_arcs, poly_zero_measure, wos_measure, HarmonicPolynomial, WalkConfig};
use harmlab_core::measure::{dist_to_flat, f_dist, flat_sample, FlatMeasureSpec};
use harmlab_core::rng::mix64;
use harmlab_core::{DiscreteMeasure, Point};

fn cloud(seed: u64, n: usize) -> DiscreteMeasure {
    let u = |k: u64| (mix64(seed.wrapping_mul(1 << 20) + k) >> 11) as f64 / (1u64 << 53) as f64;
    let pts = (0..n as u64)
        .map(|k| Point::new2(2.0 * u(3 * k) - 1.0, 2.0 * u(3 * k + 1) - 1.0))
        .collect();
    let w = (0..n as u64).map(|k| 0.1 + u(3 * k + 2)).collect();
    DiscreteMeasure::new(2, pts, w).unwrap()
}

fn transport(c: &mut Criterion) {
    let (mu, nu) = (cloud(1, 80), cloud(2, 80));
    c.bench_function("f_dist 80x80", |b| b.iter(|| f_dist(black_box(&mu), black_box(&nu), 1.0)));
}

fn walks(c: &mut Criterion) {
    let disc = make_domain(&DomainSpec::Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
        side: Side::Interior,
    })
    .unwrap();
    let arcs = equal_arcs(Point::ZERO, 1.0, 16);
    let cfg = WalkConfig::for_domain(&disc, 10_000, 1);
    c.bench_function("wos disc 1e4 walks", |b| {
        b.iter(|| wos_measure(&disc, black_box(&Point::ZERO), &arcs, &cfg).unwrap())
    });
}

fn flatness(c: &mut Criterion) {
    let mut g = c.benchmark_group("flatness");
    g.sample_size(10);
    let spec = FlatMeasureSpec::new(2, Point::new2(0.0, 1.0), 1.0).unwrap();
    let line = flat_sample(&spec, 1.0, 400).unwrap();
    g.bench_function("dist_to_flat line", |b| b.iter(|| dist_to_flat(black_box(&line), 1.0)));
    g.finish();
}

fn contour(c: &mut Criterion) {
    let h = HarmonicPolynomial::saddle();
    c.bench_function("zero measure saddle 2000", |b| {
        b.iter(|| poly_zero_measure(black_box(&h), 1.0, 2000).unwrap())
    });
}

criterion_group!(benches, transport, walks, flatness, contour);
criterion_main!(benches);
