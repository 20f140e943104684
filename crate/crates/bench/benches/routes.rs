use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use gue_painleve::discrete_painleve::log_etilde_recurrence;
use gue_painleve::hankel_tau::{airy_det, log_etilde};
use gue_painleve::sigma_solver::{solve_sigma, SigmaKind};
use gue_painleve::PrecisionConfig;
use gue_painleve_bench::{ode_grid, POINTS, SIZES};

fn determinant(c: &mut Criterion) {
    let mut g = c.benchmark_group("determinant");
    for bits in [53, 160] {
        let cfg = PrecisionConfig::with_bits(bits);
        for n in SIZES {
            g.bench_with_input(BenchmarkId::new(format!("{bits}-bit"), n), &n, |b, &n| {
                b.iter(|| POINTS.iter().map(|&s| log_etilde(n, 0.0, s, &cfg).unwrap().log_abs).sum::<f64>())
            });
        }
    }
    g.finish();
}

fn recurrence(c: &mut Criterion) {
    let mut g = c.benchmark_group("recurrence");
    for n in SIZES {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| POINTS.iter().map(|&s| log_etilde_recurrence(n, 0.0, s).unwrap()).sum::<f64>())
        });
    }
    g.finish();
}

fn sigma_ode(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_ode");
    g.sample_size(10);
    let grid = ode_grid();
    for n in SIZES {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| solve_sigma(SigmaKind::Resolvent, n, 0.0, &grid, 1e-10).unwrap())
        });
    }
    g.finish();
}

fn soft_edge(c: &mut Criterion) {
    let cfg = PrecisionConfig::default();
    c.bench_function("airy_det a=4", |b| b.iter(|| airy_det(4, black_box(-1.0), &cfg).unwrap()));
}

criterion_group!(benches, determinant, recurrence, sigma_ode, soft_edge);
criterion_main!(benches);
