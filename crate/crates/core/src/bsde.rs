//! Monte Carlo realisation of the virtual solution of
//! `Y_r = Φ(B_T) + ∫_r^T (Z_s)² b(s, B_s) ds - ∫_r^T Z_s dB_s` in one dimension.
//!
//! The backward PDE `∂_t u + ∂_xx u + F(∂_x u) b = 0`, `u(T) = Φ`, is solved by
//! time reversal with the mild solver, and the auxiliary function
//! `w(t) = -∫_t^T P_{s-t}(F(∂_x u(s)) b(s)) ds` with the same quadrature.
//! Along paths of `B` (quadratic variation `2r`):
//!
//! ```text
//! Ŷ_r = (P_{T-r} Φ)(B_r),   Ẑ_r = ∂_x (P_{T-r} Φ)(B_r),
//! Y_r = Ŷ_r - w(r, B_r),    Z_r = Ẑ_r - ∂_x w(r, B_r).
//! ```
//!
//! Paths live on the torus of the PDE grid; positions are wrapped when
//! fields are evaluated and the wraps are counted.

use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mildsolver::{
    apply_i_from, fit_contraction_constant, picard_solve, small_data_radius, MildSolution, SolverParams, TimeField,
};
use crate::nonlinearity::Nonlinearity;
use crate::roughfield::RoughCoefficient;
use crate::spectral::{besov_norm, heat_propagate, SpectralField};

fn reverse(u: &TimeField) -> TimeField {
    let horizon = *u.times.last().expect("nonempty");
    TimeField {
        times: u.times.iter().rev().map(|t| horizon - t).collect(),
        fields: u.fields.iter().rev().cloned().collect(),
    }
}

fn check_horizon(b: &RoughCoefficient, horizon: f64) -> Result<()> {
    if (b.horizon - horizon).abs() > 1e-12 * horizon {
        return Err(Error::InvalidArgument(format!(
            "coefficient horizon {} differs from the problem horizon {horizon}",
            b.horizon
        )));
    }
    Ok(())
}

/// Solves the backward PDE by `t ↦ T - t` and returns `u` on forward time,
/// `u(T) = Φ`. The warning list notes when `‖Φ‖_{α+1}` exceeds the small-data
/// radius `δ` for the horizon.
pub fn solve_backward_pde(phi: &SpectralField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<MildSolution> {
    if phi.grid().dim() != 1 {
        return Err(Error::InvalidArgument("the BSDE is one-dimensional".into()));
    }
    if nl.f_of_zero() != 0.0 {
        return Err(Error::Parameters(format!("backward problem needs F(0) = 0, {} has F(0) = {}", nl.name(), nl.f_of_zero())));
    }
    check_horizon(b, p.horizon)?;
    p.validate()?;
    let c = if b.is_zero() {
        0.0
    } else {
        match p.contraction_constant {
            Some(c) => c,
            None => fit_contraction_constant(b, p.alpha, p.beta, 0)?.constant,
        }
    };
    let params = SolverParams { contraction_constant: Some(c), ..p.clone() };
    let mut sol = picard_solve(phi, &b.time_reversed(), nl, &params)?;
    let small = small_data_radius(nl, p.horizon, c, p.alpha, p.beta)?;
    let size = besov_norm(phi, p.alpha + 1.0);
    if size > small.delta {
        sol.diagnostics.warnings.push(format!(
            "terminal condition norm {size:.3e} exceeds the small-data radius delta = {:.3e} (rho0 = {})",
            small.delta, small.rho0
        ));
    }
    sol.u = reverse(&sol.u);
    sol.diagnostics.step_norms.reverse();
    Ok(sol)
}

/// `w(t) = -∫_t^T P_{s-t}(F(∂_x u(s)) b(s)) ds` on the time grid of `u`.
pub fn solve_auxiliary_w(u: &TimeField, b: &RoughCoefficient, nl: &Nonlinearity, alpha: f64, beta: f64) -> Result<TimeField> {
    let horizon = *u.times.last().expect("nonempty") - u.times[0];
    check_horizon(b, horizon)?;
    let i = apply_i_from(&reverse(u), &b.time_reversed(), nl, alpha, beta, 0.0)?;
    let w = TimeField { times: i.times, fields: i.fields.iter().map(|f| -f).collect() };
    Ok(reverse(&w))
}

/// Terminal condition, coefficient, and the solved fields `u`, `w`.
#[derive(Clone, Debug)]
pub struct BackwardProblem {
    pub phi: SpectralField,
    pub b: RoughCoefficient,
    pub nl: Nonlinearity,
    pub params: SolverParams,
    pub solution: MildSolution,
    pub w: TimeField,
}

impl BackwardProblem {
    pub fn solve(phi: SpectralField, b: RoughCoefficient, nl: Nonlinearity, params: SolverParams) -> Result<Self> {
        let solution = solve_backward_pde(&phi, &b, &nl, &params)?;
        let w = solve_auxiliary_w(&solution.u, &b, &nl, params.alpha, params.beta)?;
        Ok(Self { phi, b, nl, params, solution, w })
    }

    pub fn horizon(&self) -> f64 {
        self.params.horizon
    }

    pub fn warnings(&self) -> &[String] {
        &self.solution.diagnostics.warnings
    }
}

/// Brownian paths with `Var(B_r - x) = 2(r - t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub t: f64,
    pub x: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    /// Unwrapped positions, `positions[p * (n_steps + 1) + i]`.
    pub positions: Vec<f64>,
}

impl PathEnsemble {
    pub fn path(&self, p: usize) -> &[f64] {
        let m = self.n_steps + 1;
        &self.positions[p * m..(p + 1) * m]
    }
}

/// Standard normals from one ChaCha20 stream by Box-Muller.
struct Normals {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Normals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * th.sin());
        r * th.cos()
    }
}

/// Simulates `n_paths` paths on a uniform grid of `[t, T]`; path `p` draws
/// from ChaCha20 stream `p` of `seed`.
pub fn simulate_paths(t: f64, x: f64, horizon: f64, n_paths: usize, n_steps: usize, seed: u64) -> Result<PathEnsemble> {
    if !(t < horizon) {
        return Err(Error::InvalidArgument(format!("need t < T, got t = {t}, T = {horizon}")));
    }
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one path and one step".into()));
    }
    let dt = (horizon - t) / n_steps as f64;
    let sd = (2.0 * dt).sqrt();
    let times = (0..=n_steps).map(|i| if i == n_steps { horizon } else { t + dt * i as f64 }).collect();
    let positions = (0..n_paths)
        .into_par_iter()
        .flat_map_iter(|p| {
            let mut g = Normals::new(seed, p as u64);
            let mut pos = x;
            std::iter::once(x).chain((0..n_steps).map(move |_| {
                pos += sd * g.next();
                pos
            }))
        })
        .collect();
    Ok(PathEnsemble { t, x, horizon, n_paths, n_steps, seed, times, positions })
}

/// `(f(x), f'(x))` for a one-dimensional field.
fn eval_with_derivative(coeffs: &[Complex64], kappa: f64, x: f64) -> (f64, f64) {
    let n = coeffs.len();
    let z = Complex64::from_polar(1.0, kappa * x);
    let mut zk = Complex64::new(1.0, 0.0);
    let mut f = coeffs[0].re;
    let mut fx = 0.0;
    for (k, c) in coeffs.iter().enumerate().take(n / 2).skip(1) {
        zk *= z;
        let term = c * zk;
        f += 2.0 * term.re;
        fx -= 2.0 * kappa * k as f64 * term.im;
    }
    (f, fx)
}

/// Ensemble mean and standard error.
fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub t: f64,
    pub mean_y: f64,
    /// Half width of the 95% confidence interval.
    pub ci_y: f64,
    pub mean_z: f64,
    pub ci_z: f64,
}

/// Per-path, per-time values of the virtual solution and the fields it is
/// built from.
#[derive(Clone, Debug)]
pub struct VirtualSolutionSample {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub w: Vec<f64>,
    pub w_x: Vec<f64>,
    /// `u(r, B_r)` and `∂_x u(r, B_r)` from the PDE solution.
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    /// `b(r, B_r)`.
    pub b: Vec<f64>,
    /// Brownian increments, `increments[p * n_steps + i] = B_{i+1} - B_i`.
    pub increments: Vec<f64>,
    /// Number of evaluated positions that fell outside `[0, L)`.
    pub wrap_events: usize,
    pub summary: Vec<TimeSummary>,
    /// `mean_p max_r Y_r²` and `mean_p Σ Z_r² Δr`.
    pub second_moments: (f64, f64),
}

impl VirtualSolutionSample {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    fn column<'a>(&self, data: &'a [f64], i: usize) -> impl Iterator<Item = f64> + Clone + 'a {
        let m = self.n_times();
        (0..self.n_paths).map(move |p| data[p * m + i])
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("t,mean_y,ci_y,mean_z,ci_z\n");
        for s in &self.summary {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", s.t, s.mean_y, s.ci_y, s.mean_z, s.ci_z);
        }
        out
    }
}

fn start_node(problem: &BackwardProblem, paths: &PathEnsemble) -> Result<usize> {
    let times = &problem.solution.u.times;
    let tol = 1e-9 * problem.horizon();
    let k = times
        .iter()
        .position(|s| (s - paths.t).abs() <= tol)
        .ok_or_else(|| Error::GridMismatch(format!("start time {} is not a node of the PDE time grid", paths.t)))?;
    if (paths.horizon - problem.horizon()).abs() > tol || times.len() - 1 - k != paths.n_steps {
        return Err(Error::GridMismatch(format!(
            "paths need {} steps on [{}, {}] to match the PDE grid",
            times.len() - 1 - k,
            paths.t,
            problem.horizon()
        )));
    }
    Ok(k)
}

/// Evaluates `(Y, Z)` and the auxiliary fields along every path.
pub fn virtual_solution(problem: &BackwardProblem, paths: &PathEnsemble) -> Result<VirtualSolutionSample> {
    let k0 = start_node(problem, paths)?;
    let grid = *problem.phi.grid();
    let period = grid.period();
    let kappa = 2.0 * std::f64::consts::PI / period;
    let horizon = problem.horizon();
    let times: Vec<f64> = problem.solution.u.times[k0..].to_vec();
    let m = times.len();

    struct Node {
        heat: Vec<Complex64>,
        w: Vec<Complex64>,
        u: Vec<Complex64>,
        b: Vec<Complex64>,
    }
    let nodes: Vec<Node> = times
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Node> {
            let heat = heat_propagate(&problem.phi, (horizon - r).max(0.0))?;
            Ok(Node {
                heat: heat.coefficients().to_vec(),
                w: problem.w.fields[k0 + i].coefficients().to_vec(),
                u: problem.solution.u.fields[k0 + i].coefficients().to_vec(),
                b: problem.b.at(r).coefficients().to_vec(),
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<[Vec<f64>; 9]> = (0..paths.n_paths)
        .into_par_iter()
        .map(|p| {
            let path = paths.path(p);
            let mut out: [Vec<f64>; 9] = Default::default();
            for (i, node) in nodes.iter().enumerate() {
                let x = path[i];
                let (yh, zh) = eval_with_derivative(&node.heat, kappa, x);
                let (w, wx) = eval_with_derivative(&node.w, kappa, x);
                let (u, ux) = eval_with_derivative(&node.u, kappa, x);
                let (bv, _) = eval_with_derivative(&node.b, kappa, x);
                for (slot, v) in out.iter_mut().zip([yh - w, zh - wx, yh, zh, w, wx, u, ux, bv]) {
                    slot.push(v);
                }
            }
            out
        })
        .collect();
    let gather = |j: usize| -> Vec<f64> { rows.iter().flat_map(|r| r[j].iter().copied()).collect() };
    let increments = (0..paths.n_paths).flat_map(|p| paths.path(p).windows(2).map(|w| w[1] - w[0])).collect();
    let wrap_events = paths.positions.iter().filter(|x| !(0.0..period).contains(*x)).count();

    let mut sample = VirtualSolutionSample {
        times: times.clone(),
        n_paths: paths.n_paths,
        y: gather(0),
        z: gather(1),
        y_hat: gather(2),
        z_hat: gather(3),
        w: gather(4),
        w_x: gather(5),
        u: gather(6),
        u_x: gather(7),
        b: gather(8),
        increments,
        wrap_events,
        summary: Vec::new(),
        second_moments: (0.0, 0.0),
    };
    sample.summary = (0..m)
        .map(|i| {
            let (my, sy) = mean_se(sample.column(&sample.y, i));
            let (mz, sz) = mean_se(sample.column(&sample.z, i));
            TimeSummary { t: times[i], mean_y: my, ci_y: 1.96 * sy, mean_z: mz, ci_z: 1.96 * sz }
        })
        .collect();
    let dt = if m > 1 { times[1] - times[0] } else { 0.0 };
    let (mut sup_y2, mut int_z2) = (0.0, 0.0);
    for p in 0..paths.n_paths {
        let ys = &sample.y[p * m..(p + 1) * m];
        let zs = &sample.z[p * m..(p + 1) * m];
        sup_y2 += ys.iter().fold(0.0_f64, |a, v| a.max(v * v));
        int_z2 += zs[..m - 1].iter().map(|z| z * z * dt).sum::<f64>();
    }
    sample.second_moments = (sup_y2 / paths.n_paths as f64, int_z2 / paths.n_paths as f64);
    Ok(sample)
}

/// Ensemble mean of one statistic at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZRow {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    pub passed: bool,
}

fn z_row(t: f64, values: impl Iterator<Item = f64> + Clone, k: f64, slack: f64) -> ZRow {
    let (mean, se) = mean_se(values);
    ZRow { t, mean, se, passed: mean.abs() <= k * se + slack }
}

/// Absolute slack covering floating-point roundoff when a statistic is
/// identically zero along every path.
const ROUNDOFF_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub k: f64,
    /// Mean of `Ŷ_{r+Δ} - Ŷ_r`.
    pub increments: Vec<ZRow>,
    /// Mean of `Y_r - Φ(B_T) + w(r, B_r) + Σ_{s ≥ r} (Z_s + ∂_x w(s, B_s)) ΔB_s`.
    pub residuals: Vec<ZRow>,
    pub passed: bool,
}

/// Tests that `Ŷ` has mean-zero increments and the virtual BSDE holds in
/// mean, both within `k` standard errors at every grid time.
pub fn martingale_test(sample: &VirtualSolutionSample, k: f64) -> Result<MartingaleReport> {
    if sample.n_paths == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let m = sample.n_times();
    let steps = m - 1;
    let increments: Vec<ZRow> = (0..steps)
        .map(|i| {
            let vals = (0..sample.n_paths).map(move |p| sample.y_hat[p * m + i + 1] - sample.y_hat[p * m + i]);
            z_row(sample.times[i], vals, k, ROUNDOFF_SLACK)
        })
        .collect();
    // backward running sums of the left-point Itô integral, per path
    let mut ito = vec![0.0; sample.n_paths * m];
    for p in 0..sample.n_paths {
        for i in (0..steps).rev() {
            let zf = sample.z[p * m + i] + sample.w_x[p * m + i];
            ito[p * m + i] = ito[p * m + i + 1] + zf * sample.increments[p * steps + i];
        }
    }
    let residuals: Vec<ZRow> = (0..m)
        .map(|i| {
            let ito = &ito;
            let vals = (0..sample.n_paths).map(move |p| {
                let phi_t = sample.y_hat[p * m + steps];
                sample.y[p * m + i] - phi_t + sample.w[p * m + i] + ito[p * m + i]
            });
            z_row(sample.times[i], vals, k, ROUNDOFF_SLACK)
        })
        .collect();
    let passed = increments.iter().chain(&residuals).all(|r| r.passed);
    Ok(MartingaleReport { k, increments, residuals, passed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacReport {
    pub y_start: f64,
    pub u_start: f64,
    pub abs_error: f64,
    /// Spread of `Y` at the start time across paths (should be zero).
    pub y_start_spread: f64,
    pub tolerance: f64,
    /// `mean(Z_r - ∂_x u(r, B_r))` per time against its confidence band.
    pub z_gap: Vec<ZRow>,
    pub max_pathwise_z_gap: f64,
    pub passed: bool,
}

/// `Y_t = u(t, x)` at the start point and `Z_r = ∂_x u(r, B_r)` along paths.
pub fn feynman_kac_check(sample: &VirtualSolutionSample, tolerance: f64, k: f64) -> FeynmanKacReport {
    let m = sample.n_times();
    let starts = sample.column(&sample.y, 0);
    let y_start = starts.clone().sum::<f64>() / sample.n_paths as f64;
    let y_start_spread = starts.fold(0.0_f64, |a, v| a.max((v - y_start).abs()));
    let u_start = sample.u[0];
    let abs_error = (y_start - u_start).abs();
    let z_gap: Vec<ZRow> = (0..m)
        .map(|i| {
            let vals = (0..sample.n_paths).map(move |p| sample.z[p * m + i] - sample.u_x[p * m + i]);
            z_row(sample.times[i], vals, k, tolerance)
        })
        .collect();
    let max_pathwise_z_gap = sample.z.iter().zip(&sample.u_x).fold(0.0_f64, |a, (z, ux)| a.max((z - ux).abs()));
    let passed = abs_error <= tolerance && y_start_spread <= tolerance && z_gap.iter().all(|r| r.passed);
    FeynmanKacReport { y_start, u_start, abs_error, y_start_spread, tolerance, z_gap, max_pathwise_z_gap, passed }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    /// `mean(Φ(B_T) + Σ F(Z_s) b(s, B_s) Δs - Σ Z_s ΔB_s) - Y_t`.
    pub gap: f64,
    pub se: f64,
    /// `|left - right|` Riemann-sum difference of the drift integral, used as
    /// the time-discretisation allowance.
    pub allowance: f64,
    pub passed: bool,
}

/// For smooth `b` the virtual solution solves the classical BSDE with
/// driver `F(Z) b`; this checks the discretised classical equation in mean.
pub fn classical_check(sample: &VirtualSolutionSample, nl: &Nonlinearity, k: f64) -> ClassicalReport {
    let m = sample.n_times();
    let steps = m - 1;
    let dt = sample.times[1] - sample.times[0];
    let per_path: Vec<(f64, f64)> = (0..sample.n_paths)
        .map(|p| {
            let at = |v: &[f64], i: usize| v[p * m + i];
            let drift = |i: usize| nl.eval(&[at(&sample.z, i)]) * at(&sample.b, i) * dt;
            let left: f64 = (0..steps).map(drift).sum();
            let right: f64 = (1..m).map(drift).sum();
            let ito: f64 = (0..steps).map(|i| at(&sample.z, i) * sample.increments[p * steps + i]).sum();
            let value = at(&sample.y_hat, steps) + left - ito - at(&sample.y, 0);
            (value, right - left)
        })
        .collect();
    let (gap, se) = mean_se(per_path.iter().map(|v| v.0));
    let allowance = (per_path.iter().map(|v| v.1).sum::<f64>() / sample.n_paths as f64).abs();
    ClassicalReport { gap, se, allowance, passed: gap.abs() <= k * se + allowance + ROUNDOFF_SLACK }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn params(steps: usize, horizon: f64) -> SolverParams {
        SolverParams::new(0.3, -0.2, horizon, steps)
    }

    #[test]
    fn interpolation_matches_eval_at() {
        let grid = Grid::new(1, 32, 3.0).unwrap();
        let f = SpectralField::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0] / 3.0).sin() + 0.2 * (4.0 * std::f64::consts::PI * x[0] / 3.0).cos());
        let kappa = 2.0 * std::f64::consts::PI / 3.0;
        for x in [-4.1, 0.3, 2.9, 7.7] {
            let (v, dv) = eval_with_derivative(f.coefficients(), kappa, x);
            assert!((v - f.eval_at([x, 0.0])).abs() < 1e-13);
            let exact = kappa * (kappa * x).cos() - 0.4 * kappa * (2.0 * kappa * x).sin();
            assert!((dv - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_are_deterministic_and_start_at_x() {
        let a = simulate_paths(0.0, 1.0, 1.0, 50, 8, 9).unwrap();
        let b = simulate_paths(0.0, 1.0, 1.0, 50, 8, 9).unwrap();
        assert_eq!(a, b);
        assert!((0..50).all(|p| a.path(p)[0] == 1.0));
        assert_ne!(a, simulate_paths(0.0, 1.0, 1.0, 50, 8, 10).unwrap());
        assert!(simulate_paths(1.0, 0.0, 1.0, 5, 2, 0).is_err());
    }

    #[test]
    fn zero_coefficient_backward_is_heat_flow() {
        let grid = Grid::line(32).unwrap();
        let phi = SpectralField::from_fn(grid, |x| 0.1 * x[0].cos());
        let b = RoughCoefficient::zero(grid, 0.5).unwrap();
        let p = params(8, 0.5);
        let sol = solve_backward_pde(&phi, &b, &Nonlinearity::quadratic(1), &p).unwrap();
        for (t, f) in sol.u.times.iter().zip(&sol.u.fields) {
            assert!(f.max_coefficient_distance(&heat_propagate(&phi, 0.5 - t).unwrap()) < 1e-15);
        }
        let w = solve_auxiliary_w(&sol.u, &b, &Nonlinearity::quadratic(1), 0.3, -0.2).unwrap();
        assert!(w.fields.iter().all(|f| f.max_coefficient() == 0.0));
    }

    #[test]
    fn constant_terminal_condition() {
        let grid = Grid::line(32).unwrap();
        let phi = SpectralField::constant(grid, 0.25);
        let b = crate::roughfield::generate_rough(-0.2, grid, 4, 4, 0.4).unwrap();
        let problem = BackwardProblem::solve(phi, b, Nonlinearity::quadratic(1), params(8, 0.4)).unwrap();
        assert!(problem.solution.u.fields.iter().all(|f| (f.mean() - 0.25).abs() < 1e-15 && f.max_coefficient() == 0.25));
        assert_eq!(problem.w.last().max_coefficient(), 0.0);
        let paths = simulate_paths(0.0, 1.0, 0.4, 200, 8, 1).unwrap();
        let s = virtual_solution(&problem, &paths).unwrap();
        assert!(s.y.iter().all(|y| (y - 0.25).abs() < 1e-14));
        assert!(s.z.iter().all(|z| z.abs() < 1e-14));
        let mt = martingale_test(&s, 4.0).unwrap();
        assert!(mt.passed);
        assert!(mt.increments.iter().all(|r| r.mean.abs() < 1e-14));
    }

    #[test]
    fn misaligned_paths_rejected() {
        let grid = Grid::line(16).unwrap();
        let problem = BackwardProblem::solve(
            SpectralField::constant(grid, 0.0),
            RoughCoefficient::zero(grid, 1.0).unwrap(),
            Nonlinearity::quadratic(1),
            params(8, 1.0),
        )
        .unwrap();
        assert!(virtual_solution(&problem, &simulate_paths(0.0, 0.0, 1.0, 4, 5, 0).unwrap()).is_err());
        assert!(virtual_solution(&problem, &simulate_paths(0.3, 0.0, 1.0, 4, 8, 0).unwrap()).is_err());
        assert!(virtual_solution(&problem, &simulate_paths(0.25, 0.0, 1.0, 4, 6, 0).unwrap()).is_ok());
    }

    #[test]
    fn shifted_nonlinearity_rejected() {
        let grid = Grid::line(16).unwrap();
        let nl = Nonlinearity::custom("x^2 + 1", 1, 2.0, 2.0).unwrap();
        let r = solve_backward_pde(&SpectralField::zeros(grid), &RoughCoefficient::zero(grid, 1.0).unwrap(), &nl, &params(4, 1.0));
        assert!(r.is_err());
    }
}
