//! Reference solutions for smooth coefficients.
//!
//! Both oracles work in physical space on a finer grid than the solver
//! under test: Cole-Hopf is exact for `F(x) = x²`, `b ≡ 1`, and the
//! Crank-Nicolson solver handles any smooth `b` with an explicit nonlinearity.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mildsolver::TimeField;
use crate::nonlinearity::Nonlinearity;
use crate::roughfield::RoughCoefficient;
use crate::spectral::{heat_propagate, Grid, SpectralField};

/// `|u₀| ≤ AMPLITUDE_GUARD` keeps `e^{u₀}` well inside double range.
pub const AMPLITUDE_GUARD: f64 = 30.0;

/// Oversampling factor of the oracles relative to the solver grid.
pub const OVERSAMPLING: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    ColeHopf,
    CrankNicolson,
}

/// Physical samples `values[n][i] = u(times[n], i·L/points)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub method: OracleMethod,
    pub period: f64,
    pub points: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Worst relative defect of the method's internal consistency check.
    pub self_check: f64,
}

fn require_line(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("oracles are one-dimensional".into()));
    }
    Ok(())
}

/// `u(t) = log(P_t e^{u₀})`, the exact solution of `u_t = u_xx + (u_x)²`.
///
/// `e^{u₀}` is formed on a grid `OVERSAMPLING` times finer than `u₀`'s; the
/// identity `e^{u(t)} = P_t e^{u₀}` is re-checked at every time and must
/// hold to `1e-10` relative.
pub fn cole_hopf(u0: &SpectralField, t_grid: &[f64]) -> Result<OracleSolution> {
    require_line(u0.grid())?;
    let m = OVERSAMPLING * u0.grid().points();
    let fine = u0.resample(m)?;
    let values0 = fine.to_physical();
    let peak = values0.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if peak > AMPLITUDE_GUARD {
        return Err(Error::AmplitudeGuard(format!(
            "max |u0| = {peak} exceeds the Cole-Hopf guard {AMPLITUDE_GUARD}"
        )));
    }
    let exp0 = SpectralField::from_physical(*fine.grid(), &values0.iter().map(|v| v.exp()).collect::<Vec<_>>())?;
    let rows: Vec<(Vec<f64>, f64)> = t_grid
        .par_iter()
        .map(|&t| -> Result<(Vec<f64>, f64)> {
            let v = heat_propagate(&exp0, t)?.to_physical();
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
                return Err(Error::AmplitudeGuard(format!("P_t e^u0 lost positivity ({bad}) at t = {t}")));
            }
            let u: Vec<f64> = v.iter().map(|x| x.ln()).collect();
            let defect = u.iter().zip(&v).fold(0.0_f64, |a, (ui, vi)| a.max((ui.exp() - vi).abs() / vi));
            Ok((u, defect))
        })
        .collect::<Result<_>>()?;
    let self_check = rows.iter().fold(0.0_f64, |a, r| a.max(r.1));
    if self_check > 1e-10 {
        return Err(Error::Divergence(format!("Cole-Hopf identity defect {self_check:e}")));
    }
    Ok(OracleSolution {
        method: OracleMethod::ColeHopf,
        period: u0.grid().period(),
        points: m,
        times: t_grid.to_vec(),
        values: rows.into_iter().map(|r| r.0).collect(),
        self_check,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrankNicolsonOptions {
    /// Finite-difference points; at least `OVERSAMPLING` times the solver's `N`.
    pub fd_points: usize,
    /// Sub-steps per interval of the output time grid.
    pub substeps: usize,
    /// Largest tolerated growth of `max|u|` over one step.
    pub growth_limit: f64,
}

impl CrankNicolsonOptions {
    pub fn for_grid(grid: &Grid) -> Self {
        Self { fd_points: OVERSAMPLING * grid.points(), substeps: 1, growth_limit: 1.5 }
    }
}

/// Solves `A x = r` for the symmetric circulant tridiagonal `A` with
/// diagonal `diag` and off-diagonals `off` (Sherman-Morrison on Thomas).
fn solve_cyclic(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    // A = T + u vᵀ with u = (γ, 0, …, off), v = (1, 0, …, off/γ)
    let gamma = -diag;
    let mut main = vec![diag; n];
    main[0] -= gamma;
    main[n - 1] -= off * off / gamma;
    let thomas = |r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / main[0];
        d[0] = r[0] / main[0];
        for i in 1..n {
            let m = main[i] - off * c[i - 1];
            c[i] = off / m;
            d[i] = (r[i] - off * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let y = thomas(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = thomas(&u);
    let vy = y[0] + off / gamma * y[n - 1];
    let vz = z[0] + off / gamma * z[n - 1];
    let factor = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(a, b)| a - factor * b).collect()
}

/// Semi-implicit finite differences: Crank-Nicolson diffusion, explicit
/// `F(∇u) b` with second-order central differences.
pub fn crank_nicolson(
    u0: &SpectralField,
    b: &RoughCoefficient,
    nl: &Nonlinearity,
    t_grid: &[f64],
    opts: &CrankNicolsonOptions,
) -> Result<OracleSolution> {
    require_line(u0.grid())?;
    u0.grid().check_same(b.grid())?;
    if nl.dim() != 1 {
        return Err(Error::InvalidArgument("Crank-Nicolson oracle needs a scalar-gradient nonlinearity".into()));
    }
    let n = u0.grid().points();
    if opts.fd_points < OVERSAMPLING * n || !opts.fd_points.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "fd_points must be a power of two >= {} (got {})",
            OVERSAMPLING * n,
            opts.fd_points
        )));
    }
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must start at 0 and increase".into()));
    }
    let m = opts.fd_points;
    let h = u0.grid().period() / m as f64;
    let sample = |f: &SpectralField| -> Result<Vec<f64>> { Ok(f.resample(m)?.to_physical()) };
    let b_phys: Vec<Vec<f64>> = b.slices.iter().map(sample).collect::<Result<_>>()?;
    let slice_at = |t: f64| b.times.partition_point(|&s| s <= t).saturating_sub(1);

    let mut u = sample(u0)?;
    let mut values = vec![u.clone()];
    let mut step = 0usize;
    for w in t_grid.windows(2) {
        let dt = (w[1] - w[0]) / opts.substeps.max(1) as f64;
        for sub in 0..opts.substeps.max(1) {
            let t = w[0] + sub as f64 * dt;
            let bt = &b_phys[slice_at(t)];
            let r = dt / (h * h);
            let rhs: Vec<f64> = (0..m)
                .map(|i| {
                    let (l, c, rr) = (u[(i + m - 1) % m], u[i], u[(i + 1) % m]);
                    let lap = l - 2.0 * c + rr;
                    let grad = (rr - l) / (2.0 * h);
                    c + 0.5 * r * lap + dt * nl.eval(&[grad]) * bt[i]
                })
                .collect();
            let next = solve_cyclic(1.0 + r, -0.5 * r, &rhs);
            step += 1;
            let before = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let after = next.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !after.is_finite() || after > opts.growth_limit * before.max(1.0) {
                return Err(Error::Instability { step, factor: after / before.max(1.0), limit: opts.growth_limit });
            }
            u = next;
        }
        values.push(u.clone());
    }
    Ok(OracleSolution {
        method: OracleMethod::CrankNicolson,
        period: u0.grid().period(),
        points: m,
        times: t_grid.to_vec(),
        values,
        self_check: 0.0,
    })
}

/// Per-time errors of a solver run against an oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub sup_err: Vec<f64>,
    pub l2_err: Vec<f64>,
}

impl ErrorReport {
    pub fn max_sup(&self) -> f64 {
        self.sup_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup_err,l2_err\n");
        for ((t, s), l) in self.times.iter().zip(&self.sup_err).zip(&self.l2_err) {
            let _ = writeln!(out, "{t:.17e},{s:.17e},{l:.17e}");
        }
        out
    }
}

/// Samples both on the solver's nodes and times and measures the difference.
pub fn compare(solution: &TimeField, oracle: &OracleSolution) -> Result<ErrorReport> {
    let grid = solution.grid();
    require_line(grid)?;
    let n = grid.points();
    if !oracle.points.is_multiple_of(n) || (oracle.period - grid.period()).abs() > 1e-12 * grid.period() {
        return Err(Error::GridMismatch(format!(
            "oracle grid ({} points, period {}) does not nest the solver grid ({n}, {})",
            oracle.points,
            oracle.period,
            grid.period()
        )));
    }
    let stride = oracle.points / n;
    let tol = 1e-9 * solution.times.last().copied().unwrap_or(1.0).max(1.0);
    let mut report = ErrorReport { times: Vec::new(), sup_err: Vec::new(), l2_err: Vec::new() };
    for (t, f) in solution.times.iter().zip(&solution.fields) {
        let j = oracle
            .times
            .iter()
            .position(|s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::GridMismatch(format!("oracle has no sample at t = {t}")))?;
        let u = f.to_physical();
        let (mut sup, mut sq): (f64, f64) = (0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            let d = ui - oracle.values[j][i * stride];
            sup = sup.max(d.abs());
            sq += d * d;
        }
        report.times.push(*t);
        report.sup_err.push(sup);
        report.l2_err.push((sq * grid.spacing()).sqrt());
    }
    Ok(report)
}

/// `log₂(e_i / e_{i+1})` for errors at successively halved step sizes.
pub fn refinement_slopes(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn times(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t * i as f64 / n as f64).collect()
    }

    #[test]
    fn cyclic_solver_matches_dense_residual() {
        let n = 9;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        let (diag, off) = (2.5, -0.6);
        let x = solve_cyclic(diag, off, &rhs);
        for i in 0..n {
            let ax = diag * x[i] + off * (x[(i + 1) % n] + x[(i + n - 1) % n]);
            assert!((ax - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cole_hopf_trivial_cases() {
        let grid = Grid::line(32).unwrap();
        let u0 = SpectralField::from_fn(grid, |x| 0.4 * x[0].sin());
        let sol = cole_hopf(&u0, &[0.0, 0.1]).unwrap();
        let fine = u0.resample(128).unwrap().to_physical();
        assert!(sol.values[0].iter().zip(&fine).all(|(a, b)| (a - b).abs() < 1e-13));
        let c = cole_hopf(&SpectralField::constant(grid, 0.8), &[0.0, 0.5, 2.0]).unwrap();
        assert!(c.values.iter().flatten().all(|v| (v - 0.8).abs() < 1e-14));
        assert!(cole_hopf(&SpectralField::constant(grid, 31.0), &[0.0]).is_err());
    }

    #[test]
    fn crank_nicolson_constant_data_is_an_ode() {
        // u₀ ≡ c, b ≡ β₀, F(0) = k: u(t) = c + k β₀ t.
        let grid = Grid::line(16).unwrap();
        let b = RoughCoefficient::constant(grid, 0.5, 1.0).unwrap();
        let nl = Nonlinearity::custom("x^2 + 2", 1, 2.0, 2.0).unwrap();
        let tg = times(1.0, 10);
        let sol = crank_nicolson(&SpectralField::constant(grid, 0.3), &b, &nl, &tg, &CrankNicolsonOptions::for_grid(&grid)).unwrap();
        for (t, row) in tg.iter().zip(&sol.values) {
            assert!(row.iter().all(|v| (v - (0.3 + 2.0 * 0.5 * t)).abs() < 1e-12));
        }
    }

    #[test]
    fn crank_nicolson_heat_flow_second_order() {
        let grid = Grid::line(16).unwrap();
        let u0 = SpectralField::from_fn(grid, |x| x[0].sin());
        let zero = RoughCoefficient::zero(grid, 1.0).unwrap();
        let nl = Nonlinearity::quadratic(1);
        let err = |fd: usize, steps: usize| {
            let opts = CrankNicolsonOptions { fd_points: fd, substeps: 1, growth_limit: 1.5 };
            let sol = crank_nicolson(&u0, &zero, &nl, &times(0.5, steps), &opts).unwrap();
            let exact = (-0.5f64).exp();
            sol.values.last().unwrap().iter().enumerate().fold(0.0_f64, |a, (i, v)| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / fd as f64;
                a.max((v - exact * x.sin()).abs())
            })
        };
        let ratio = err(64, 16) / err(128, 32);
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn unstable_steps_are_detected() {
        let grid = Grid::line(16).unwrap();
        let u0 = SpectralField::from_fn(grid, |x| 2.0 * (3.0 * x[0]).sin());
        let b = RoughCoefficient::constant(grid, 50.0, 1.0).unwrap();
        let r = crank_nicolson(&u0, &b, &Nonlinearity::quadratic(1), &times(1.0, 2), &CrankNicolsonOptions::for_grid(&grid));
        assert!(matches!(r, Err(Error::Instability { .. })));
    }

    #[test]
    fn compare_identical_is_zero() {
        let grid = Grid::line(16).unwrap();
        let u0 = SpectralField::from_fn(grid, |x| 0.3 * x[0].cos());
        let tg = times(0.2, 4);
        let fields = tg.iter().map(|t| heat_propagate(&u0, *t).unwrap()).collect();
        let tf = TimeField::new(tg.clone(), fields).unwrap();
        let oracle = OracleSolution {
            method: OracleMethod::ColeHopf,
            period: grid.period(),
            points: 16,
            times: tg,
            values: tf.fields.iter().map(|f| f.to_physical()).collect(),
            self_check: 0.0,
        };
        let r = compare(&tf, &oracle).unwrap();
        assert_eq!(r.max_sup(), 0.0);
        assert!(r.to_csv().starts_with("t,sup_err,l2_err\n"));
        let shifted = OracleSolution { points: 24, ..oracle };
        assert!(compare(&tf, &shifted).is_err());
    }
}
