use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roughpde::bsde::{simulate_paths, virtual_solution, BackwardProblem};
use roughpde::mildsolver::{fit_contraction_constant, picard_solve, select_rho_t};
use roughpde::paraproduct::{bony_decompose, dealiased_product};
use roughpde::spectral::{besov_norm, dyadic_decompose, heat_propagate};
use roughpde::{Nonlinearity, SolverParams};
use roughpde_bench::{field, initial, line, local_params, rough, smooth, ALPHA, BETA};

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [256, 1024, 4096] {
        let f = field(n, BETA, 0);
        group.bench_with_input(BenchmarkId::new("dyadic_decompose", n), &f, |b, f| b.iter(|| dyadic_decompose(f)));
        group.bench_with_input(BenchmarkId::new("besov_norm", n), &f, |b, f| b.iter(|| besov_norm(f, -0.3)));
        group.bench_with_input(BenchmarkId::new("heat_propagate", n), &f, |b, f| b.iter(|| heat_propagate(f, 0.01).unwrap()));
    }
    group.finish();
}

fn products(c: &mut Criterion) {
    let mut group = c.benchmark_group("product");
    for n in [256, 1024, 4096] {
        let f = field(n, 0.7, 1);
        let g = field(n, -0.3, 2);
        group.bench_function(BenchmarkId::new("dealiased", n), |b| b.iter(|| dealiased_product(&f, &g).unwrap()));
        group.bench_function(BenchmarkId::new("bony", n), |b| b.iter(|| bony_decompose(&f, &g).unwrap()));
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let grid = line(128);
    let u0 = initial(grid);
    let b = rough(grid, 1.0);
    let nl = Nonlinearity::quadratic(1);
    let fit = fit_contraction_constant(&b, ALPHA, BETA, 0).unwrap();
    let cp = select_rho_t(besov_norm(&u0, ALPHA + 1.0), fit.constant, ALPHA, BETA);
    let mut group = c.benchmark_group("picard_solve");
    group.sample_size(20);
    for steps in [16, 64] {
        let p = local_params(steps, fit.constant, cp.rho0, cp.t0);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &p, |bch, p| bch.iter(|| picard_solve(&u0, &b, &nl, p).unwrap()));
    }
    group.finish();
}

fn bsde(c: &mut Criterion) {
    let grid = line(64);
    let horizon = 0.5;
    let steps = 32;
    let phi = initial(grid).scale(0.4);
    let p = SolverParams::new(ALPHA, BETA, horizon, steps);
    let problem = BackwardProblem::solve(phi, smooth(grid, horizon), Nonlinearity::quadratic(1), p).unwrap();
    let mut group = c.benchmark_group("bsde");
    group.sample_size(10);
    for n_paths in [1_000, 10_000] {
        let paths = simulate_paths(0.0, 1.0, horizon, n_paths, steps, 0).unwrap();
        group.bench_with_input(BenchmarkId::new("simulate_paths", n_paths), &n_paths, |b, &n| {
            b.iter(|| simulate_paths(0.0, 1.0, horizon, n, steps, 0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("virtual_solution", n_paths), &paths, |b, paths| {
            b.iter(|| virtual_solution(&problem, paths).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral, products, solver, bsde);
criterion_main!(benches);
