use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use degenspec::eigensolve::count_curve;
use degenspec::grid::{add_diagonal_potential, kinetic_on_grid, Axis, Grid};
use degenspec::par::Execution;
use std::hint::black_box;

fn oscillator(n: usize) -> degenspec::grid::SparseSymMatrix {
    let axis = Axis::new(-6.0, 6.0, n).unwrap();
    let grid = Grid::new(vec![axis.clone(), axis]).unwrap();
    let kin = kinetic_on_grid(&grid, &[1.0, 1.0]).unwrap();
    add_diagonal_potential(&kin, &grid, |x| x[0] * x[0] + x[1] * x[1]).unwrap()
}

fn bench_count_curve(c: &mut Criterion) {
    let a = oscillator(80);
    let lambdas: Vec<f64> = (1..=16).map(|i| 2.0 * i as f64 + 0.5).collect();
    let mut group = c.benchmark_group("count_curve");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| count_curve(black_box(&a), &lambdas, exec))
        });
    }
    group.finish();
}

fn bench_matvec(c: &mut Criterion) {
    let a = oscillator(400);
    let x: Vec<f64> = (0..a.dim()).map(|i| (i as f64).sin()).collect();
    let mut y = vec![0.0; a.dim()];
    let mut group = c.benchmark_group("matvec");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| a.matvec_with(exec, black_box(&x), &mut y))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_count_curve, bench_matvec);
criterion_main!(benches);
