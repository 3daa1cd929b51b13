use criterion::{black_box, criterion_group, criterion_main, Criterion};
use statica_bench::{example, kottler4, point};
use statica_core::catalog::selftest;
use statica_core::integrals::{flux_scan, FluxWeight};
use statica_core::static_ops::{verify_static, STATIC_TOL};
use statica_core::{parse, ExampleName, QuadratureSettings, SamplePlan};

fn expressions(c: &mut Criterion) {
    let src = "sqrt(1 + r^2 - 2/r^2) * exp(-r/3) + log(1 + r^4)";
    c.bench_function("parse", |b| b.iter(|| parse(black_box(src)).unwrap()));
    let e = parse(src).unwrap();
    c.bench_function("differentiate_twice", |b| b.iter(|| e.differentiate("r").differentiate("r")));
}

fn curvature(c: &mut Criterion) {
    let chart = kottler4().chart().unwrap();
    let p = point(&chart, 3.0);
    c.bench_function("kottler_curvature", |b| b.iter(|| chart.curvature(black_box(&p)).unwrap()));
    c.bench_function("kottler_ricci_gradient", |b| b.iter(|| chart.ricci_gradient(black_box(&p)).unwrap()));
    let m = kottler4().metric;
    c.bench_function("kottler_shifted_ricci", |b| b.iter(|| m.shifted_ricci(black_box(500.0), 3.0).unwrap()));
}

fn pipelines(c: &mut Criterion) {
    let d = kottler4();
    let v = d.radial_potential().unwrap();
    let settings = QuadratureSettings::default();
    c.bench_function("kottler_flux_scan", |b| {
        b.iter(|| flux_scan(&d.metric, &v, -3.0, FluxWeight::S, &settings).unwrap())
    });
    let cusp = example(ExampleName::Cusp);
    let chart = cusp.chart().unwrap();
    let plan = SamplePlan::default();
    c.bench_function("cusp_verify_static", |b| {
        b.iter(|| verify_static(&chart, &cusp.potential, &plan, STATIC_TOL).unwrap())
    });
    let mut group = c.benchmark_group("catalog");
    group.sample_size(10);
    group.bench_function("selftest", |b| b.iter(|| selftest(&plan, &settings).unwrap()));
    group.finish();
}

criterion_group!(benches, expressions, curvature, pipelines);
criterion_main!(benches);
