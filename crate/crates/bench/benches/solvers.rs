use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdot_bench::{device1_basis, device1_dipole, device1_problem};
use qdot_core::dynamics::{evolve, DriveSpec};
use qdot_core::spectral::{assemble, solve_generalized};

fn assembly(c: &mut Criterion) {
    let problem = device1_problem();
    let mut group = c.benchmark_group("assemble");
    for intervals in [160, 320, 640] {
        let basis = device1_basis(intervals);
        group.bench_with_input(BenchmarkId::from_parameter(intervals), &basis, |b, basis| {
            b.iter(|| assemble(black_box(basis), &problem, 1).unwrap())
        });
    }
    group.finish();
}

fn eigensolve(c: &mut Criterion) {
    let problem = device1_problem();
    let mut group = c.benchmark_group("solve_generalized");
    group.sample_size(10);
    for intervals in [160, 320] {
        let (h, s) = assemble(&device1_basis(intervals), &problem, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(intervals), &(h, s), |b, (h, s)| {
            b.iter(|| solve_generalized(black_box(h), black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn rk4(c: &mut Criterion) {
    let dm = device1_dipole();
    let omega = dm.resonance_frequency();
    // 100 drive periods, 20 000 steps
    let drive = DriveSpec::new(25e-3, omega, 100.0 * 2.0 * std::f64::consts::PI / omega).unwrap();
    let mut group = c.benchmark_group("evolve");
    group.sample_size(20);
    group.bench_function("device1_100_periods", |b| b.iter(|| evolve(&dm, black_box(&drive)).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, eigensolve, rk4);
criterion_main!(benches);
