//! Benchmarks for the data-parallel inner loops.
//!
//! Build once with the default `parallel` feature and once without to
//! compare the rayon fan-out against the sequential fallback:
//!
//! ```text
//! cargo bench -p lticert -- --save-baseline rayon
//! cargo bench -p lticert --no-default-features -- --baseline rayon
//! ```

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lticert::certificates::l2_gain_sweep;
use lticert::linalg::Matrix;
use lticert::oracles::{ellipsoid_invariance_check, hinf_norm, lyap_solve_model};
use lticert::trajectory::{simulate, DiffScheme, InputSignal, IntegrationMethod, LtiModel};

fn peak_model() -> LtiModel {
    let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, -2.0]]).unwrap();
    let c = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
    LtiModel::autonomous_with_output(a, c).unwrap()
}

fn gain_model() -> LtiModel {
    let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -2.0]]).unwrap();
    let b = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    let c = Matrix::from_rows(&[vec![4.0, 1.0]]).unwrap();
    LtiModel::new(a, b, c, Matrix::zeros(1, 1)).unwrap()
}

fn bench_ellipsoid_check(c: &mut Criterion) {
    let model = peak_model();
    let p = lyap_solve_model(model.a(), &Matrix::identity(2)).unwrap();
    let mut group = c.benchmark_group("ellipsoid_invariance_check");
    for samples in [32usize, 128, 512] {
        group.bench_with_input(
            BenchmarkId::from_parameter(samples),
            &samples,
            |b, &samples| {
                b.iter(|| {
                    black_box(
                        ellipsoid_invariance_check(&model, &p, samples, 6.0, 0.01, 42).unwrap(),
                    )
                })
            },
        );
    }
    group.finish();
}

fn bench_hinf_sweep(c: &mut Criterion) {
    let model = gain_model();
    let mut group = c.benchmark_group("hinf_norm");
    for grid in [500usize, 2000] {
        group.bench_with_input(BenchmarkId::from_parameter(grid), &grid, |b, &grid| {
            b.iter(|| black_box(hinf_norm(&model, 1e-3, 1e3, grid).unwrap()))
        });
    }
    group.finish();
}

fn bench_gain_sweep(c: &mut Criterion) {
    let model = gain_model();
    let traj = simulate(&model, &[0.0, 0.0], &InputSignal::UnitStep, 8.0, 0.01, IntegrationMethod::ExactZoh)
        .unwrap();
    let horizons: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let mut group = c.benchmark_group("l2_gain_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter(horizons.len()), |b| {
        b.iter(|| {
            let out = l2_gain_sweep(&traj, &horizons, DiffScheme::Forward);
            assert!(out.iter().all(|(_, r)| r.is_ok()));
            black_box(out)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_ellipsoid_check, bench_hinf_sweep, bench_gain_sweep);
criterion_main!(benches);
