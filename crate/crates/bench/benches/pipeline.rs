use std::hint::black_box;

use arrmorse::flows::{integrate, Guards};
use arrmorse::master::{find_critical_points, SolverConfig};
use arrmorse::os_aomoto::{aomoto_cohomology, build_os_algebra};
use arrmorse::{build_lattice, Complex, Field, Weights};
use arrmorse_bench::{generic_lines, points};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice");
    for m in [4, 6, 8] {
        let arr = generic_lines(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &arr, |b, arr| {
            b.iter(|| build_lattice(black_box(arr)).unwrap())
        });
    }
    group.finish();
}

fn critical_points(c: &mut Criterion) {
    let mut group = c.benchmark_group("critical_points");
    group.sample_size(20);
    for m in [3, 4, 5] {
        let arr = generic_lines(m);
        let w = Weights::ones(m);
        group.bench_with_input(BenchmarkId::new("lines", m), &arr, |b, arr| {
            b.iter(|| find_critical_points(black_box(arr), &w, &SolverConfig::default()).unwrap())
        });
    }
    let arr = points(6);
    let w = Weights::ones(6);
    group.bench_function("points/6", |b| {
        b.iter(|| find_critical_points(black_box(&arr), &w, &SolverConfig::default()).unwrap())
    });
    group.finish();
}

fn aomoto(c: &mut Criterion) {
    let mut group = c.benchmark_group("aomoto");
    for m in [4, 6, 8] {
        let arr = generic_lines(m);
        let lat = build_lattice(&arr).unwrap();
        let os = build_os_algebra(&arr, &lat);
        let w = Weights::ones(m);
        group.bench_with_input(BenchmarkId::new("exact", m), &os, |b, os| {
            b.iter(|| aomoto_cohomology(black_box(os), &w).unwrap())
        });
        let wf = Weights::from_f64(&vec![1.0; m]);
        group.bench_with_input(BenchmarkId::new("float", m), &os, |b, os| {
            b.iter(|| aomoto_cohomology(black_box(os), &wf).unwrap())
        });
    }
    group.finish();
}

fn flow(c: &mut Criterion) {
    let arr = generic_lines(3);
    let w = Weights::ones(3);
    let z0 = [Complex::new(0.3, 0.2), Complex::new(0.4, -0.1)];
    c.bench_function("flow/iota_one_unit", |b| {
        b.iter(|| integrate(&arr, &w, Field::IotaAlpha, black_box(&z0), 1.0, &Guards::default()).unwrap())
    });
}

criterion_group!(benches, lattice, critical_points, aomoto, flow);
criterion_main!(benches);
