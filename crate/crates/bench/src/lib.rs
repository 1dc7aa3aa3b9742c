//! Shared inputs for the criterion benches in `benches/`.

use roughpde::roughfield::{gaussian_field, generate_rough, smooth_coefficient};
use roughpde::{Grid, RoughCoefficient, SolverParams, SpectralField};

pub const ALPHA: f64 = 0.3;
pub const BETA: f64 = -0.2;

pub fn line(points: usize) -> Grid {
    Grid::line(points).expect("power-of-two grid")
}

/// Seeded field of regularity `reg`.
pub fn field(points: usize, reg: f64, stream: u64) -> SpectralField {
    gaussian_field(line(points), reg, 42, stream)
}

pub fn initial(grid: Grid) -> SpectralField {
    SpectralField::from_fn(grid, |x| 0.5 * x[0].sin() + 0.2 * (2.0 * x[0]).cos())
}

pub fn rough(grid: Grid, horizon: f64) -> RoughCoefficient {
    generate_rough(BETA, grid, 42, 4, horizon).expect("valid rough coefficient")
}

pub fn smooth(grid: Grid, horizon: f64) -> RoughCoefficient {
    smooth_coefficient("1 + 0.5*sin(x - t)", grid, 8, horizon).expect("valid expression")
}

/// Solver settings in the contraction regime for `rough(grid, 1.0)`.
pub fn local_params(steps: usize, contraction_constant: f64, rho0: f64, t0: f64) -> SolverParams {
    let mut p = SolverParams::new(ALPHA, BETA, t0, steps);
    p.rho = rho0;
    p.contraction_constant = Some(contraction_constant);
    p
}
