//! Mild solutions of `∂_t u = Δu + F(∇u) b` by Picard iteration.
//!
//! The Duhamel term `I_t(u) = ∫_0^t P_{t-s}(F(∇u(s)) b(s)) ds` is evaluated
//! by product integration: the integrand is frozen at the left node of each
//! step and the heat kernel is integrated exactly mode by mode, which gives
//! the first-order recursion
//!
//! ```text
//! I(t_{n+1}) = e^{-λΔt} I(t_n) + (1 - e^{-λΔt})/λ · G(t_n),   λ = |2πk/L|²
//! ```
//!
//! and never samples the kernel at its singularity.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{apply_f, sublinear_field_constant, Nonlinearity};
use crate::paraproduct::{check_product_condition, dealiased_product, product, Condition};
use crate::roughfield::{ess_sup_norm, gaussian_field, RoughCoefficient};
use crate::spectral::{besov_norm, gradient, heat_propagate, schauder_check, Grid, SpectralField};

/// Smallest ball radius used when selecting `ρ₀`; any radius above
/// `‖u₀‖_{α+1}` is admissible, and the floor keeps the `C/R₀` condition
/// from degenerating when the data is tiny.
pub const MIN_RADIUS: f64 = 0.5;

/// Outcome of the parameter gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterCheck {
    pub passed: bool,
    pub explanation: String,
}

/// `0 < α < 1` and `max{-α, α-1} < β < 0`.
pub fn check_parameters(alpha: f64, beta: f64) -> ParameterCheck {
    if !(alpha > 0.0 && alpha < 1.0) {
        return ParameterCheck { passed: false, explanation: format!("alpha = {alpha} must lie in (0, 1)") };
    }
    let lower = f64::max(-alpha, alpha - 1.0);
    if lower < beta && beta < 0.0 {
        ParameterCheck {
            passed: true,
            explanation: format!("max{{-alpha, alpha-1}} = {lower} < beta = {beta} < 0 (assumption A2)"),
        }
    } else {
        ParameterCheck {
            passed: false,
            explanation: format!("assumption A2 needs max{{-alpha, alpha-1}} = {lower} < beta < 0, got beta = {beta}"),
        }
    }
}

/// `(α - 1 - β)/2`, the (negative) power of `ρ` in the contraction bounds.
pub fn rho_exponent(alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0 - beta) / 2.0
}

/// `θ = (α + 1 - β)/2`, the order of the Duhamel kernel singularity.
pub fn kernel_exponent(alpha: f64, beta: f64) -> f64 {
    (alpha + 1.0 - beta) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub alpha: f64,
    pub beta: f64,
    /// Final time `T`.
    pub horizon: f64,
    pub n_time_steps: usize,
    pub rho: f64,
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    /// `1` is plain Picard; smaller values under-relax.
    pub damping: f64,
    /// Abort when `‖u(t)‖_{α+1}` exceeds this mid-iteration.
    pub norm_ceiling: f64,
    /// The constant `C` of the contraction bounds; fitted from `b` when absent.
    pub contraction_constant: Option<f64>,
}

impl SolverParams {
    pub fn new(alpha: f64, beta: f64, horizon: f64, n_time_steps: usize) -> Self {
        Self {
            alpha,
            beta,
            horizon,
            n_time_steps,
            rho: 1.0,
            picard_tol: 1e-10,
            max_picard_iters: 100,
            damping: 1.0,
            norm_ceiling: 1e8,
            contraction_constant: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gate = check_parameters(self.alpha, self.beta);
        if !gate.passed {
            return Err(Error::Parameters(gate.explanation));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Parameters(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_time_steps < 4 {
            return Err(Error::Parameters(format!("need at least 4 time steps, got {}", self.n_time_steps)));
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(Error::Parameters(format!("rho must be finite and >= 1, got {}", self.rho)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Parameters(format!("picard_tol must be positive, got {}", self.picard_tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameters(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_picard_iters == 0 {
            return Err(Error::Parameters("max_picard_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Vec<f64> {
        uniform_times(self.horizon, self.n_time_steps)
    }
}

fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|n| horizon * n as f64 / steps as f64).collect()
}

/// Fields sampled on an increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeField {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl TimeField {
    pub fn new(times: Vec<f64>, fields: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument("time field needs one field per time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("time grid must increase strictly".into()));
        }
        let grid = *fields[0].grid();
        for f in &fields {
            grid.check_same(f.grid())?;
        }
        Ok(Self { times, fields })
    }

    /// The same field at every time.
    pub fn constant(times: Vec<f64>, field: &SpectralField) -> Self {
        let fields = vec![field.clone(); times.len()];
        Self { times, fields }
    }

    pub fn zeros(times: Vec<f64>, grid: Grid) -> Self {
        Self::constant(times, &SpectralField::zeros(grid))
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SpectralField {
        self.fields.last().expect("nonempty")
    }

    fn check_aligned(&self, other: &TimeField) -> Result<()> {
        self.grid().check_same(other.grid())?;
        if self.times != other.times {
            return Err(Error::GridMismatch("time grids differ".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &TimeField) -> Result<TimeField> {
        self.check_aligned(other)?;
        let fields = self.fields.iter().zip(&other.fields).map(|(a, b)| a - b).collect();
        Ok(TimeField { times: self.times.clone(), fields })
    }

    /// `(1 - θ) self + θ other`.
    pub fn blend(&self, other: &TimeField, theta: f64) -> Result<TimeField> {
        self.check_aligned(other)?;
        if theta == 1.0 {
            return Ok(other.clone());
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| &a.scale(1.0 - theta) + &b.scale(theta))
            .collect();
        Ok(TimeField { times: self.times.clone(), fields })
    }

    /// `‖u(t)‖_γ` at every node.
    pub fn norms(&self, gamma: f64) -> Vec<f64> {
        self.fields.par_iter().map(|f| besov_norm(f, gamma)).collect()
    }
}

/// `sup_t e^{-ρt} ‖u(t)‖_γ` over the time grid.
pub fn weighted_norm(u: &TimeField, rho: f64, gamma: f64) -> f64 {
    u.norms(gamma)
        .into_iter()
        .zip(&u.times)
        .map(|(n, t)| (-rho * t).exp() * n)
        .fold(0.0, f64::max)
}

/// Diagnostics recorded by [`picard_solve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖u(t_n)‖_{α+1}` of the returned iterate.
    pub step_norms: Vec<f64>,
    /// `‖u_{n+1} - u_n‖^{(ρ)}` per iteration.
    pub residuals: Vec<f64>,
    /// Ratios of consecutive residuals.
    pub contraction_factors: Vec<f64>,
    pub residuals_monotone: bool,
    /// `‖J(u) - u‖^{(ρ)}` for the returned `u`.
    pub fixed_point_residual: f64,
    pub iterations: usize,
    pub rho: f64,
    pub contraction_constant: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct MildSolution {
    pub u: TimeField,
    pub diagnostics: Diagnostics,
    pub params: SolverParams,
}

impl MildSolution {
    pub fn time_grid(&self) -> &[f64] {
        &self.u.times
    }
}

/// Fitted ingredients of the constant `C = c ‖b‖_{L∞_T C^β}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub bony: f64,
    pub schauder: f64,
    pub ess_sup: f64,
    pub constant: f64,
}

/// Fits `C` as (product constant) × (Schauder constant) × `ess sup ‖b‖_β`.
///
/// The product constant is the worst `‖fg‖_β / (‖f‖_α ‖g‖_β)` over seeded
/// `C^{α+1/2}` probes against every slice of `b`; the Schauder constant the
/// worst `t^θ ‖P_t g‖_{β+2θ} / ‖g‖_β` over the slices and a geometric time grid.
pub fn fit_contraction_constant(b: &RoughCoefficient, alpha: f64, beta: f64, seed: u64) -> Result<ConstantFit> {
    let ess_sup = ess_sup_norm(b, beta);
    if ess_sup == 0.0 {
        return Ok(ConstantFit { bony: 0.0, schauder: 0.0, ess_sup, constant: 0.0 });
    }
    let grid = *b.grid();
    let theta = kernel_exponent(alpha, beta);
    let t_grid: Vec<f64> = (0..25).map(|i| 10f64.powf(-6.0 + 0.25 * i as f64)).collect();
    let step = (b.slices.len() / 8).max(1);
    let picked: Vec<&SpectralField> = b.slices.iter().step_by(step).collect();
    let probes: Vec<SpectralField> = (0..3).map(|s| gaussian_field(grid, alpha + 0.5, seed, 1000 + s)).collect();
    let per_slice: Vec<Result<(f64, f64)>> = picked
        .par_iter()
        .map(|slice| {
            let mut bony: f64 = 0.0;
            for f in &probes {
                let (_, cert) = product(f, slice, alpha, beta, Condition::Override)?;
                bony = bony.max(cert.fitted_constant.unwrap_or(0.0));
            }
            let s = schauder_check(slice, beta, theta, &t_grid)?;
            Ok((bony, s.smoothing_ratio))
        })
        .collect();
    let (mut bony, mut schauder): (f64, f64) = (0.0, 0.0);
    for r in per_slice {
        let (bo, sc) = r?;
        bony = bony.max(bo);
        schauder = schauder.max(sc);
    }
    Ok(ConstantFit { bony, schauder, ess_sup, constant: bony * schauder * ess_sup })
}

/// `F(∇u) b` on one time node.
fn integrand(u: &SpectralField, b: &SpectralField, nl: &Nonlinearity) -> Result<SpectralField> {
    let fu = apply_f(nl, &gradient(u))?;
    dealiased_product(&fu, b)
}

/// Exact heat integration of piecewise-constant integrands.
fn duhamel_recursion(g: &[SpectralField], times: &[f64]) -> TimeField {
    let grid = *g[0].grid();
    let lambda: Vec<f64> = (0..grid.len())
        .map(|i| {
            let k = grid.wavevector(i);
            grid.angular(k[0]).powi(2) + grid.angular(k[1]).powi(2)
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    out.push(SpectralField::zeros(grid));
    for (n, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let gc = g[n].coefficients();
        for (i, a) in acc.iter_mut().enumerate() {
            let l = lambda[i];
            let (decay, weight) = if l == 0.0 { (1.0, dt) } else { ((-l * dt).exp(), -(-l * dt).exp_m1() / l) };
            *a = *a * decay + gc[i] * weight;
        }
        out.push(SpectralField::from_raw(grid, acc.clone()));
    }
    TimeField { times: times.to_vec(), fields: out }
}

fn check_rough_grid(u: &TimeField, b: &RoughCoefficient) -> Result<()> {
    u.grid().check_same(b.grid())
}

/// `I(u)` on the time grid of `u`; `b` is read at `t_offset + t`.
pub fn apply_i_from(u: &TimeField, b: &RoughCoefficient, nl: &Nonlinearity, alpha: f64, beta: f64, t_offset: f64) -> Result<TimeField> {
    check_rough_grid(u, b)?;
    check_product_condition(alpha, beta)?;
    if b.is_zero() {
        return Ok(TimeField::zeros(u.times.clone(), *u.grid()));
    }
    let last = u.len() - 1;
    let g: Vec<SpectralField> = (0..last)
        .into_par_iter()
        .map(|n| integrand(&u.fields[n], b.at(t_offset + u.times[n]), nl))
        .collect::<Result<_>>()?;
    if g.is_empty() {
        return Ok(TimeField::zeros(u.times.clone(), *u.grid()));
    }
    Ok(duhamel_recursion(&g, &u.times))
}

/// `I_t(u) = ∫_0^t P_{t-s}(F(∇u(s)) b(s)) ds`.
pub fn apply_i(u: &TimeField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<TimeField> {
    apply_i_from(u, b, nl, p.alpha, p.beta, 0.0)
}

fn heat_flow(u0: &SpectralField, times: &[f64]) -> Result<TimeField> {
    let fields = times.par_iter().map(|&t| heat_propagate(u0, t)).collect::<Result<Vec<_>>>()?;
    Ok(TimeField { times: times.to_vec(), fields })
}

fn apply_j_from(
    u: &TimeField,
    heat: &TimeField,
    b: &RoughCoefficient,
    nl: &Nonlinearity,
    alpha: f64,
    beta: f64,
    t_offset: f64,
) -> Result<TimeField> {
    let i = apply_i_from(u, b, nl, alpha, beta, t_offset)?;
    let fields = heat.fields.iter().zip(&i.fields).map(|(h, v)| h + v).collect();
    Ok(TimeField { times: u.times.clone(), fields })
}

/// `J_t(u) = P_t u₀ + I_t(u)`.
pub fn apply_j(u: &TimeField, u0: &SpectralField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<TimeField> {
    u0.grid().check_same(u.grid())?;
    let heat = heat_flow(u0, &u.times)?;
    apply_j_from(u, &heat, b, nl, p.alpha, p.beta, 0.0)
}

/// `ρ₀`, `T₀` and the data they were chosen for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionParams {
    /// Radius actually used (`max(R₀, MIN_RADIUS)`).
    pub r0: f64,
    pub rho0: f64,
    pub t0: f64,
    pub c: f64,
}

/// Infinity when no finite double works, which happens when `(α, β)` sits
/// so close to the edge of the window that `ρ^e` barely decays.
fn smallest_power_of_two(mut ok: impl FnMut(f64) -> bool) -> f64 {
    let mut rho = 1.0_f64;
    while rho.is_finite() {
        if ok(rho) {
            return rho;
        }
        rho *= 2.0;
    }
    f64::INFINITY
}

/// Smallest `ρ₀ ∈ {1, 2, 4, …}` meeting the three contraction bounds, then
/// the largest `T₀` with `e^{ρ₀ T₀} ≤ 7/5`. `ρ₀ = ∞, T₀ = 0` when the
/// bounds cannot be met in double precision.
pub fn select_rho_t(r0: f64, c: f64, alpha: f64, beta: f64) -> ContractionParams {
    let r = r0.max(MIN_RADIUS);
    let e = rho_exponent(alpha, beta);
    let rho0 = smallest_power_of_two(|rho| {
        let p = rho.powf(e);
        2.0 * c * p * (1.0 + 4.0 * r * r).sqrt() <= 0.25
            && c / r * p <= 0.25
            && c * p * (1.0 + 8.0 * r * r).sqrt() < 1.0
    });
    ContractionParams { r0: r, rho0, t0: 1.4_f64.ln() / rho0, c }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallData {
    pub rho0: f64,
    /// Admissible size of `‖u₀‖_{α+1}` on the whole horizon.
    pub delta: f64,
}

/// Small-data regime: smallest `ρ₀` with `½ + C√5 ρ₀^e ≤ 1` and `3Cρ₀^e < 1`;
/// then `δ = e^{-ρ₀ T}`.
pub fn small_data_radius(nl: &Nonlinearity, horizon: f64, c: f64, alpha: f64, beta: f64) -> Result<SmallData> {
    let f0 = nl.f_of_zero();
    if f0 != 0.0 {
        return Err(Error::Parameters(format!("small-data theory needs F(0) = 0, {} has F(0) = {f0}", nl.name())));
    }
    let e = rho_exponent(alpha, beta);
    let rho0 = smallest_power_of_two(|rho| {
        let p = rho.powf(e);
        0.5 + c * 5f64.sqrt() * p <= 1.0 && 3.0 * c * p < 1.0
    });
    Ok(SmallData { rho0, delta: (-rho0 * horizon).exp() })
}

fn resolve_constant(b: &RoughCoefficient, p: &SolverParams) -> Result<f64> {
    match p.contraction_constant {
        Some(c) => Ok(c),
        None => Ok(fit_contraction_constant(b, p.alpha, p.beta, 0)?.constant),
    }
}

/// Picard iteration on `[t_offset, t_offset + p.horizon]` with `b` shifted.
pub fn picard_solve_from(
    u0: &SpectralField,
    b: &RoughCoefficient,
    nl: &Nonlinearity,
    p: &SolverParams,
    t_offset: f64,
) -> Result<MildSolution> {
    p.validate()?;
    u0.grid().check_same(b.grid())?;
    if u0.grid().dim() != nl.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} acts on {} gradient components but the grid has dimension {}",
            nl.name(),
            nl.dim(),
            u0.grid().dim()
        )));
    }
    let gamma = p.alpha + 1.0;
    let mut warnings = Vec::new();
    let c = if b.is_zero() { Some(0.0) } else { Some(resolve_constant(b, p)?) };
    if let Some(c) = c {
        let local = select_rho_t(besov_norm(u0, gamma), c, p.alpha, p.beta);
        if p.horizon > local.t0 && !nl.satisfies_a4_declared() {
            let small = (nl.f_of_zero() == 0.0)
                .then(|| small_data_radius(nl, p.horizon, c, p.alpha, p.beta).ok())
                .flatten()
                .filter(|s| besov_norm(u0, gamma) <= s.delta);
            if small.is_none() {
                warnings.push(format!(
                    "horizon {} exceeds the local existence time T0 = {:.3e} (rho0 = {}); outside the proven regime",
                    p.horizon, local.t0, local.rho0
                ));
            }
        }
    }

    let times = p.time_grid();
    let heat = heat_flow(u0, &times)?;
    let mut u = heat.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    for iter in 0..p.max_picard_iters {
        let ju = apply_j_from(&u, &heat, b, nl, p.alpha, p.beta, t_offset)?;
        let next = u.blend(&ju, p.damping)?;
        let residual = weighted_norm(&next.sub(&u)?, p.rho, gamma);
        residuals.push(residual);
        let peak = next.norms(gamma).into_iter().fold(0.0, f64::max);
        if !(peak <= p.norm_ceiling) {
            let node = next.norms(gamma).iter().position(|n| !(*n <= p.norm_ceiling)).unwrap_or(0);
            return Err(Error::NormExplosion {
                iteration: iter + 1,
                time: t_offset + times[node],
                norm: peak,
                ceiling: p.norm_ceiling,
            });
        }
        u = next;
        if residual <= p.picard_tol {
            converged = true;
            break;
        }
        if stalled(&residuals) {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: residuals.len(),
            last_residual: *residuals.last().unwrap_or(&f64::NAN),
            residuals,
        });
    }
    let contraction_factors: Vec<f64> = residuals
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let residuals_monotone = residuals.windows(2).all(|w| w[1] <= w[0]);
    if !residuals_monotone {
        warnings.push("Picard residuals were not monotone".into());
    }
    let fixed_point_residual = weighted_norm(&apply_j_from(&u, &heat, b, nl, p.alpha, p.beta, t_offset)?.sub(&u)?, p.rho, gamma);
    let diagnostics = Diagnostics {
        step_norms: u.norms(gamma),
        iterations: residuals.len(),
        residuals,
        contraction_factors,
        residuals_monotone,
        fixed_point_residual,
        rho: p.rho,
        contraction_constant: c,
        warnings,
    };
    Ok(MildSolution { u, diagnostics, params: p.clone() })
}

/// Residuals that grew on each of the last five iterations, or blew up
/// by 1e6 over the first one.
fn stalled(residuals: &[f64]) -> bool {
    let n = residuals.len();
    if residuals.iter().any(|r| !r.is_finite()) {
        return true;
    }
    if n >= 2 && residuals[n - 1] > 1e6 * residuals[0].max(f64::MIN_POSITIVE) {
        return true;
    }
    n >= 6 && residuals[n - 6..].windows(2).all(|w| w[1] >= w[0])
}

/// Picard iteration `u_{n+1} = (1-θ)u_n + θ J(u_n)` from `u⁰(t) = P_t u₀`.
pub fn picard_solve(u0: &SpectralField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<MildSolution> {
    picard_solve_from(u0, b, nl, p, 0.0)
}

/// `‖J(u) - J(v)‖^{(ρ)} / ‖u - v‖^{(ρ)}`; `None` when `u = v`.
pub fn contraction_probe(
    u: &TimeField,
    v: &TimeField,
    u0: &SpectralField,
    b: &RoughCoefficient,
    nl: &Nonlinearity,
    p: &SolverParams,
) -> Result<Option<f64>> {
    let gamma = p.alpha + 1.0;
    let denom = weighted_norm(&u.sub(v)?, p.rho, gamma);
    if denom == 0.0 {
        return Ok(None);
    }
    let ju = apply_j(u, u0, b, nl, p)?;
    let jv = apply_j(v, u0, b, nl, p)?;
    Ok(Some(weighted_norm(&ju.sub(&jv)?, p.rho, gamma) / denom))
}

/// Output of [`apriori_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriBound {
    /// `max_t v(t)`, the bound on `‖u(t)‖_{α+1}`.
    pub k: f64,
    /// Fixed point `v(t_n)` of the integral inequality.
    pub profile: Vec<f64>,
    pub times: Vec<f64>,
    /// Constant in front of `‖u₀‖_{α+1}`.
    pub c_initial: f64,
    /// Constant in front of the Duhamel kernel.
    pub c_drift: f64,
    pub iterations: usize,
    pub diverged: bool,
}

/// Solves `v(t) = c₀‖u₀‖ + c₁ T^{1-θ}/(1-θ) + c₁ ∫_0^t (t-s)^{-θ} v(s) ds`
/// on the time grid by direct iteration.
///
/// `c₀` is the largest measured `‖P_t u₀‖_{α+1}/‖u₀‖_{α+1}` (at least 1) and
/// `c₁ = C · c_F · c_∇`, with `C` from [`fit_contraction_constant`], `c_F`
/// the measured sub-linear composition constant of `F` and
/// `c_∇ = 3/2 · 2π/L` the Bernstein factor of one derivative on a dyadic
/// block. Each step of the inequality map uses the right end of every
/// subinterval, which over-estimates the (non-decreasing) fixed point.
pub fn apriori_bound(u0: &SpectralField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<AprioriBound> {
    p.validate()?;
    if !nl.satisfies_a4_declared() {
        return Err(Error::Parameters(format!("{} does not declare a global Lipschitz constant (A4)", nl.name())));
    }
    let gamma = p.alpha + 1.0;
    let times = p.time_grid();
    let n0 = besov_norm(u0, gamma);
    let heat_norms: Vec<f64> = heat_flow(u0, &times)?.norms(gamma);
    let c_initial = if n0 > 0.0 { heat_norms.iter().fold(1.0_f64, |m, h| m.max(h / n0)) } else { 1.0 };
    let c = resolve_constant(b, p)?;
    let c_f = if c > 0.0 { sublinear_field_constant(nl, p.alpha, 0) } else { 0.0 };
    let c_grad = 1.5 * 2.0 * std::f64::consts::PI / u0.grid().period();
    let c_drift = c * c_f * c_grad;
    let theta = kernel_exponent(p.alpha, p.beta);
    let one_minus = 1.0 - theta;
    let a = c_initial * n0 + c_drift * p.horizon.powf(one_minus) / one_minus;

    let weights = |n: usize, i: usize| -> f64 {
        ((times[n] - times[i]).powf(one_minus) - (times[n] - times[i + 1]).powf(one_minus)) / one_minus
    };
    let ceiling = 1e12 * a.max(1.0);
    let mut v = vec![a; times.len()];
    let mut iterations = 0;
    let mut diverged = false;
    if c_drift > 0.0 {
        for _ in 0..10_000 {
            iterations += 1;
            let next: Vec<f64> = (0..times.len())
                .map(|n| a + c_drift * (0..n).map(|i| weights(n, i) * v[i + 1]).sum::<f64>())
                .collect();
            let change = next.iter().zip(&v).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            v = next;
            if v.iter().any(|x| !(x.is_finite() && *x <= ceiling)) {
                diverged = true;
                break;
            }
            if change <= 1e-13 * a.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    let k = v.iter().copied().fold(0.0, f64::max);
    Ok(AprioriBound { k, profile: v, times, c_initial, c_drift, iterations, diverged })
}

/// Checks `α - 1 - β + ε < 0`, the range where time regularity of order `ε`
/// is available.
pub fn check_time_regularity_regime(alpha: f64, beta: f64, eps: f64) -> Result<()> {
    if eps > 0.0 && alpha - 1.0 - beta + eps < 0.0 {
        Ok(())
    } else {
        Err(Error::Parameters(format!(
            "need eps > 0 and alpha - 1 - beta + eps < 0, got {}",
            alpha - 1.0 - beta + eps
        )))
    }
}

/// `sup_t ‖u(t)‖_γ + sup_{s<t} ‖u(t) - u(s)‖_γ / (t-s)^ε` over grid pairs.
pub fn holder_time_norm(u: &TimeField, eps: f64, gamma: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let sup = u.norms(gamma).into_iter().fold(0.0, f64::max);
    let n = u.len();
    let semi = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..j)
                .map(|i| besov_norm(&(&u.fields[j] - &u.fields[i]), gamma) / (u.times[j] - u.times[i]).powf(eps))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup + semi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpStatus {
    Completed,
    NormExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub status: BlowUpStatus,
    pub t_reached: f64,
    /// `(t, ‖u(t)‖_{α+1})` over all windows.
    pub norm_trace: Vec<(f64, f64)>,
    /// `(start, length)` of every window.
    pub windows: Vec<(f64, f64)>,
    pub restart_count: usize,
}

/// Restarts the local solver on windows `[t_k, t_k + T₀(R_k)]` with
/// `R_k = ‖u(t_k)‖_{α+1}` until `T` is reached or the norm passes `ceiling`.
///
/// `p.horizon` is the total time `T`; `p.n_time_steps` is the number of steps
/// per window. At most `max_windows` windows are attempted.
pub fn blow_up_scan(
    u0: &SpectralField,
    b: &RoughCoefficient,
    nl: &Nonlinearity,
    p: &SolverParams,
    ceiling: f64,
    max_windows: usize,
) -> Result<BlowUpReport> {
    p.validate()?;
    let gamma = p.alpha + 1.0;
    let c = if b.is_zero() { 0.0 } else { resolve_constant(b, p)? };
    let mut t = 0.0;
    let mut u = u0.clone();
    let mut norm_trace = vec![(0.0, besov_norm(u0, gamma))];
    let mut windows = Vec::new();
    while p.horizon - t > 1e-12 * p.horizon {
        if windows.len() == max_windows {
            return Err(Error::Divergence(format!(
                "window budget of {max_windows} exhausted at t = {t:.6e} (last window {:.3e})",
                windows.last().map(|w: &(f64, f64)| w.1).unwrap_or(0.0)
            )));
        }
        let r = norm_trace.last().unwrap().1;
        let cp = select_rho_t(r, c, p.alpha, p.beta);
        if !cp.rho0.is_finite() {
            return Err(Error::Divergence(format!("no finite weight meets the contraction bounds at t = {t:.6e} (R = {r:.4e})")));
        }
        let len = cp.t0.min(p.horizon - t);
        let wp = SolverParams {
            horizon: len,
            rho: cp.rho0,
            contraction_constant: Some(c),
            norm_ceiling: f64::INFINITY,
            ..p.clone()
        };
        let sol = picard_solve_from(&u, b, nl, &wp, t)?;
        windows.push((t, len));
        for (tn, n) in sol.u.times.iter().zip(&sol.diagnostics.step_norms).skip(1) {
            norm_trace.push((t + tn, *n));
            if *n > ceiling {
                return Ok(BlowUpReport {
                    status: BlowUpStatus::NormExceeded,
                    t_reached: t + tn,
                    norm_trace,
                    restart_count: windows.len() - 1,
                    windows,
                });
            }
        }
        t += len;
        u = sol.u.last().clone();
    }
    Ok(BlowUpReport {
        status: BlowUpStatus::Completed,
        t_reached: p.horizon,
        norm_trace,
        restart_count: windows.len().saturating_sub(1),
        windows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Local existence: `[0, T₀]` with `ρ₀` from [`select_rho_t`].
    Local,
    /// Small data: `[0, T]` with `ρ₀` from [`small_data_radius`].
    SmallData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub regime: Regime,
    pub rho0: f64,
    pub horizon: f64,
    pub weighted_norm: f64,
    /// `2 ‖u₀‖_{α+1}`.
    pub bound: f64,
    pub holds: bool,
}

/// Solves in the proven regime and checks `‖u‖^{(ρ₀)} ≤ 2 ‖u₀‖_{α+1}`.
///
/// The small-data regime on `[0, p.horizon]` is used when `F(0) = 0` and
/// `‖u₀‖_{α+1} ≤ δ`; otherwise the local regime on `[0, T₀]`.
pub fn continuity_check(u0: &SpectralField, b: &RoughCoefficient, nl: &Nonlinearity, p: &SolverParams) -> Result<ContinuityReport> {
    p.validate()?;
    let gamma = p.alpha + 1.0;
    let c = if b.is_zero() { 0.0 } else { resolve_constant(b, p)? };
    let n0 = besov_norm(u0, gamma);
    let small = if nl.f_of_zero() == 0.0 {
        small_data_radius(nl, p.horizon, c, p.alpha, p.beta).ok().filter(|s| n0 <= s.delta)
    } else {
        None
    };
    let (regime, rho0, horizon) = match small {
        Some(s) => (Regime::SmallData, s.rho0, p.horizon),
        None => {
            let cp = select_rho_t(n0, c, p.alpha, p.beta);
            if !cp.rho0.is_finite() {
                return Err(Error::Divergence("no finite weight meets the contraction bounds".into()));
            }
            (Regime::Local, cp.rho0, cp.t0)
        }
    };
    let wp = SolverParams { horizon, rho: rho0, contraction_constant: Some(c), ..p.clone() };
    let sol = picard_solve(u0, b, nl, &wp)?;
    let wn = weighted_norm(&sol.u, rho0, gamma);
    let bound = 2.0 * n0;
    Ok(ContinuityReport { regime, rho0, horizon, weighted_norm: wn, bound, holds: wn <= bound + p.picard_tol })
}
