use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qas_bench::{logits, spd_measure, transport_instance};
use qas_core::measure::{w1_discrete, w1_to_dirac};
use qas_core::numerics::project_simplex;
use qas_core::qas::{karcher_barycenter, KarcherOptions};

fn w1(c: &mut Criterion) {
    let mut group = c.benchmark_group("w1");
    for support in [4, 8, 16] {
        let (g, mu, nu) = transport_instance(32, support, 1);
        group.bench_with_input(BenchmarkId::new("flow", support), &support, |b, _| {
            b.iter(|| w1_discrete(&g, black_box(&mu), black_box(&nu)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dirac", support), &support, |b, _| {
            b.iter(|| w1_to_dirac(&g, black_box(&mu), 0).unwrap())
        });
    }
    group.finish();
}

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_simplex");
    for n in [8, 64, 512] {
        let vs = logits(n, 64, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| vs.iter().map(|v| project_simplex(black_box(v)).unwrap()[0]).sum::<f64>())
        });
    }
    group.finish();
}

fn karcher(c: &mut Criterion) {
    let mut group = c.benchmark_group("karcher");
    for dim in [2, 3, 5] {
        let mu = spd_measure(dim, 4, 3);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| karcher_barycenter(black_box(&mu), KarcherOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, w1, projection, karcher);
criterion_main!(benches);
