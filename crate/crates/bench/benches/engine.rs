// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluxmol::circuit::devices::DEVICE_A;
use fluxmol::circuit::{build_hamiltonian, FluxPoint};
use fluxmol::fitter::{objective, Candidate};
use fluxmol::spectrum::diagonalize;
use fluxmol_bench::device_a_dataset;
use std::hint::black_box;

fn build(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_hamiltonian");
    for dim in [20, 30] {
        let basis = DEVICE_A.mode_basis(dim).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(dim), &basis, |b, basis| {
            b.iter(|| build_hamiltonian(&DEVICE_A, FluxPoint(black_box(0.3)), basis).unwrap())
        });
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("diagonalize");
    g.sample_size(20);
    for dim in [20, 30] {
        let basis = DEVICE_A.mode_basis(dim).unwrap();
        let h = build_hamiltonian(&DEVICE_A, FluxPoint(0.3), &basis).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(dim), &h, |b, h| {
            b.iter(|| diagonalize(black_box(h), 5).unwrap())
        });
    }
    g.finish();
}

fn fit_objective(c: &mut Criterion) {
    let data = device_a_dataset(20);
    let start = Candidate::from_params(&DEVICE_A);
    let product = DEVICE_A.e_j * DEVICE_A.e_c;
    let mut g = c.benchmark_group("objective");
    g.sample_size(10);
    g.bench_function("device_a_dim20", |b| {
        b.iter(|| objective(black_box(&start), product, 20, &data))
    });
    g.finish();
}

criterion_group!(benches, build, eigen, fit_objective);
criterion_main!(benches);
