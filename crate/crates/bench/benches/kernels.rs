use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use pmt_core::catalog::bind;
use pmt_core::numjet::{c, Seed};
use pmt_core::verify::{check_equivalence, run_suite, SamplingConfig};
use pmt_core::{Catalog, Jet, ScalarJetPoint, SuiteConfig, Transform};
use std::hint::black_box;

fn jets(cr: &mut Criterion) {
    let x = Jet::seed(Complex64::new(1.3, 0.02), Seed::X);
    let w = Jet::seed(c(0.8), Seed::W);
    cr.bench_function("jet/mul_add", |b| {
        b.iter(|| black_box(x) * black_box(w) + x)
    });
    cr.bench_function("jet/powc", |b| {
        b.iter(|| black_box(x).powc(Complex64::new(-0.5, 0.3)).unwrap())
    });
    cr.bench_function("jet/ln_exp", |b| {
        b.iter(|| black_box(w).ln().unwrap().exp())
    });
}

fn pushforward(cr: &mut Criterion) {
    let cat = Catalog::new();
    let case = cat
        .instantiate_case("T2.18", &bind(&[("n", c(1.0)), ("mu", c(0.5))]))
        .unwrap();
    let Transform::Scalar(tr) = &case.transform else {
        unreachable!()
    };
    let pt = ScalarJetPoint {
        x: c(1.2),
        t: c(0.9),
        w: c(1.4),
        w_x: c(-0.6),
        w_t: c(0.3),
        w_xx: c(1.1),
    };
    cr.bench_function("pushforward/T2.18", |b| {
        b.iter(|| tr.pushforward(black_box(&pt)).unwrap())
    });

    let cfg = SamplingConfig {
        count: 100,
        ..SamplingConfig::default()
    };
    cr.bench_function("equivalence/T2.18x100", |b| {
        b.iter(|| check_equivalence(&case, &cfg))
    });
}

fn suite(cr: &mut Criterion) {
    let cat = Catalog::new();
    let cfg = SuiteConfig {
        samples: 20,
        cases: Some(vec!["T2.10".into(), "T3.12".into(), "HGEN".into()]),
        workers: Some(1),
        ..SuiteConfig::default()
    };
    let mut g = cr.benchmark_group("suite");
    g.sample_size(10);
    g.bench_function("subset", |b| b.iter(|| run_suite(&cat, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, jets, pushforward, suite);
criterion_main!(benches);
