//! Sequential vs. parallel comparison for the chunked kernels.
//!
//! Run with `cargo bench -p telab-core`. Both paths use the same chunk
//! layout, so the numbers they produce are bit-identical; only wall time
//! differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use telab_core::exec::ExecMode;
use telab_core::lp::{GridSpec, LpOptions, LpProblem};
use telab_core::mat::{f_calib, Mat2};
use telab_core::poly::PolyCalibration;
use telab_core::potential::Potential;
use telab_core::theta::theta;

fn modes() -> [(&'static str, ExecMode); 2] {
    [("seq", ExecMode::Sequential), ("par", ExecMode::Parallel)]
}

fn bench_sampling_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("theta_midpoint_convexity_100k");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                telab_core::exec::chunked_sum(mode, 100_000, 4096, |i| {
                    let x = (i as f64).sin();
                    let y = (i as f64 * 0.7).cos();
                    let lam = 0.9 * (i as f64 * 0.11).sin();
                    theta(lam, [x, y])
                })
            });
        });
    }
    group.finish();
}

fn bench_oracle_scan(c: &mut Criterion) {
    let n = Mat2::new(0.0, 1.0, 0.0, 0.0);
    let mut group = c.benchmark_group("legendre_objective_scan_200k");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                telab_core::exec::chunked_max(mode, 200_000, 4096, |i| {
                    let t = i as f64 * 1e-5;
                    let m = Mat2::new(t.sin(), t.cos(), (2.0 * t).sin(), -t.sin());
                    m.dot(&n) - f_calib(m)
                })
            });
        });
    }
    group.finish();
}

fn bench_poly_grid(c: &mut Criterion) {
    let pc = PolyCalibration::new(6).unwrap();
    let mut group = c.benchmark_group("poly_bounds_grid_128");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| pc.verify_bounds_with_mode(3.0, 128, mode).unwrap());
        });
    }
    group.finish();
}

fn bench_lp_assembly(c: &mut Criterion) {
    let potential = Potential::aviles_giga();
    let spec = GridSpec { r: 2.0, nx_cells: 64, ny_cells: 64 };
    let seg = telab_core::potential::SegmentSpec::new([0.0, -1.0], [0.0, 1.0]).unwrap();
    let mut group = c.benchmark_group("lp_energy_gradient_64x64_p16");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            let opts = LpOptions { exec_mode: mode, ..LpOptions::default() };
            let problem = LpProblem::new(&potential, &seg, spec, 10_000, 16.0, 1.0, opts).unwrap();
            let x = problem.initial_field();
            let mut grad = vec![0.0; x.len()];
            b.iter(|| problem.energy_and_gradient(&x, &mut grad));
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_sampling_suite,
    bench_oracle_scan,
    bench_poly_grid,
    bench_lp_assembly
);
criterion_main!(benches);
