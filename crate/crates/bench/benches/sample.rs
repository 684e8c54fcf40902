use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use topoft::analytic::rm_exhaustive_oracle;
use topoft::lattice::{Boundary, Lattice3D};
use topoft::noise::{trial_rng, NoiseModel, Sampler};

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    let lat = Lattice3D::build([12, 12, 12], Boundary::Periodic).unwrap();
    let sampler = Sampler::new(&lat);
    let models = [
        ("independent", NoiseModel::Independent { q: 0.029 }),
        ("gate_only", NoiseModel::gate_only(0.0096)),
        ("model2", NoiseModel::Model2 { p_p: 0.003, p_s: 0.003, p_m: 0.003, p2: 0.003 }),
    ];
    for (name, model) in models {
        let mut t = 0;
        group.bench_function(BenchmarkId::new(name, 12), |b| {
            b.iter(|| {
                t += 1;
                black_box(sampler.sample(&lat, &model, &mut trial_rng(7, t), false).unwrap())
            })
        });
    }
    group.finish();
}

fn lattice_build(c: &mut Criterion) {
    c.bench_function("lattice_build_16", |b| {
        b.iter(|| Lattice3D::build(black_box([16, 16, 16]), Boundary::Periodic).unwrap())
    });
}

fn reed_muller(c: &mut Criterion) {
    let mut group = c.benchmark_group("reed_muller");
    group.sample_size(10);
    group.bench_function("exhaustive_order4", |b| b.iter(|| rm_exhaustive_oracle(black_box(4))));
    group.finish();
}

criterion_group!(benches, sampling, lattice_build, reed_muller);
criterion_main!(benches);
