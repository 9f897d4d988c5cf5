//! Rayon vs sequential comparison of the data-parallel hot loops: the
//! support-direction sweep behind boundary sampling and the t-grid of the
//! quadratic-fermion sweep. The parallel path runs in pools of 1 and all
//! cores; the sequential path bypasses rayon entirely through
//! `exec::seq_map`, which is also what the crate compiles down to without
//! the `parallel` feature.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gapwit_core::exec;
use gapwit_core::freefermion::{bdg_diagonalize, jw_map};
use gapwit_core::numrange::{support_point, SupportOptions};
use gapwit_core::operator::HermitianOperator;
use gapwit_core::pauli::{build_witness, build_xy, PauliSum};
use std::f64::consts::PI;

fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn bench_support_sweep(c: &mut Criterion) {
    let h = HermitianOperator::from_pauli(&build_xy(7, 0.3).unwrap()).unwrap();
    let v = HermitianOperator::from_pauli(&build_witness(7).unwrap()).unwrap();
    let opts = SupportOptions::default();
    let angles = angle_grid(32);

    let mut group = c.benchmark_group("support_sweep_32_angles");
    group.sample_size(10);
    group.bench_function("seq_map", |b| {
        b.iter(|| {
            exec::seq_map(angles.clone(), |theta| {
                support_point(&h, &v, theta, &opts).unwrap().point
            })
        })
    });
    group.bench_function(BenchmarkId::new("par_map", "pool_1"), |b| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        b.iter(|| {
            pool.install(|| {
                exec::par_map(angles.clone(), |theta| {
                    support_point(&h, &v, theta, &opts).unwrap().point
                })
            })
        })
    });
    group.bench_function(BenchmarkId::new("par_map", "pool_all"), |b| {
        b.iter(|| {
            exec::par_map(angles.clone(), |theta| {
                support_point(&h, &v, theta, &opts).unwrap().point
            })
        })
    });
    group.finish();
}

fn bench_fermion_grid(c: &mut Criterion) {
    let h = build_xy(64, 0.5).unwrap();
    let v = build_witness(64).unwrap();
    let zero = PauliSum::zero(64).unwrap();
    let model_h = jw_map(&h, &zero, 0.0).unwrap();
    let model_v = jw_map(&zero, &v, 1.0).unwrap();
    let ts: Vec<f64> = (0..16).map(|j| j as f64 / 15.0).collect();

    let mut group = c.benchmark_group("fermion_grid_16_points_n64");
    group.sample_size(10);
    group.bench_function("seq_map", |b| {
        b.iter(|| {
            exec::seq_map(ts.clone(), |t| {
                bdg_diagonalize(&model_h.combine(&model_v, t).unwrap())
                    .unwrap()
                    .ground_energy
            })
        })
    });
    group.bench_function("par_map", |b| {
        b.iter(|| {
            exec::par_map(ts.clone(), |t| {
                bdg_diagonalize(&model_h.combine(&model_v, t).unwrap())
                    .unwrap()
                    .ground_energy
            })
        })
    });
    group.finish();
}

criterion_group!(benches, bench_support_sweep, bench_fermion_grid);
criterion_main!(benches);
