//! Self-checks run by `roughpde validate <suite>`.
//!
//! Each suite rebuilds its inputs from seeds, runs one part of the pipeline
//! and compares against closed forms, the oracles or the theoretical bounds.
//! `quick` shrinks grids, seeds and path counts for smoke testing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bsde::{classical_check, feynman_kac_check, martingale_test, simulate_paths, virtual_solution, BackwardProblem};
use crate::error::{Error, Result};
use crate::mildsolver::{
    apriori_bound, blow_up_scan, check_parameters, contraction_probe, continuity_check, fit_contraction_constant, picard_solve,
    rho_exponent, select_rho_t, weighted_norm, BlowUpStatus, SolverParams, TimeField,
};
use crate::nonlinearity::Nonlinearity;
use crate::oracle::{cole_hopf, compare};
use crate::paraproduct::{bony_decompose, product, Condition};
use crate::roughfield::{gaussian_field, generate_rough, smooth_coefficient, RoughCoefficient};
use crate::spectral::{besov_norm, dyadic_decompose, schauder_check, Grid, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Besov,
    Schauder,
    Bony,
    Contraction,
    Oracle,
    Bsde,
    Apriori,
    Parameters,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Besov,
        Suite::Schauder,
        Suite::Bony,
        Suite::Contraction,
        Suite::Oracle,
        Suite::Bsde,
        Suite::Apriori,
        Suite::Parameters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Besov => "besov",
            Suite::Schauder => "schauder",
            Suite::Bony => "bony",
            Suite::Contraction => "contraction",
            Suite::Oracle => "oracle",
            Suite::Bsde => "bsde",
            Suite::Apriori => "apriori",
            Suite::Parameters => "parameters",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub quick: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<SuiteCheck>,
    pub passed: bool,
}

struct Checks(Vec<SuiteCheck>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.0.push(SuiteCheck { name: name.into(), passed, detail });
    }

    fn finish(self, suite: Suite) -> SuiteReport {
        let passed = self.0.iter().all(|c| c.passed);
        SuiteReport { suite, checks: self.0, passed }
    }
}

pub fn run_suite(suite: Suite, opts: &ValidationOptions) -> Result<SuiteReport> {
    let mut checks = Checks(Vec::new());
    match suite {
        Suite::Besov => besov(&mut checks, opts)?,
        Suite::Schauder => schauder(&mut checks, opts)?,
        Suite::Bony => bony(&mut checks, opts)?,
        Suite::Contraction => contraction(&mut checks, opts)?,
        Suite::Oracle => oracle(&mut checks, opts)?,
        Suite::Bsde => bsde(&mut checks, opts)?,
        Suite::Apriori => apriori(&mut checks, opts)?,
        Suite::Parameters => parameters(&mut checks),
    }
    Ok(checks.finish(suite))
}

fn relative(a: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        a
    } else {
        a / scale
    }
}

fn besov(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (d, n) in [(1, 256), (2, 64)] {
        let grid = Grid::new(d, n, 1.0)?;
        for s in 0..3 {
            let f = gaussian_field(grid, -0.2, opts.seed + s, 0);
            let rec = dyadic_decompose(&f).reconstruct();
            worst = worst.max(relative(rec.max_coefficient_distance(&f), f.max_coefficient()));
        }
    }
    checks.push("reconstruction", worst <= 1e-10, format!("worst relative defect {worst:.3e}"));

    let sizes: &[usize] = if opts.quick { &[64, 128, 256] } else { &[256, 512, 1024] };
    for s in 0..if opts.quick { 2 } else { 3 } {
        let seed = opts.seed + s;
        let mut low = Vec::new();
        let mut high = Vec::new();
        for &n in sizes {
            let b = generate_rough(-0.2, Grid::line(n)?, seed, 1, 1.0)?;
            low.push(besov_norm(&b.slices[0], -0.3));
            high.push(besov_norm(&b.slices[0], -0.1));
        }
        let spread = low.iter().copied().fold(0.0, f64::max) / low.iter().copied().fold(f64::INFINITY, f64::min);
        let growing = high.windows(2).all(|w| w[1] > w[0]) && high[high.len() - 1] >= 1.1 * high[0];
        checks.push(
            &format!("dichotomy_seed_{seed}"),
            spread <= 1.1 && growing,
            format!("gamma=-0.3 {low:.4?} (spread {spread:.3}); gamma=-0.1 {high:.4?}"),
        );
    }
    Ok(())
}

fn schauder_times() -> Vec<f64> {
    (0..25).map(|i| 10f64.powf(-6.0 + 0.25 * i as f64)).collect()
}

fn schauder(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let base = if opts.quick { 64 } else { 256 };
    let times = schauder_times();
    for (gamma, theta) in [(-0.3, 0.4), (-0.2, 0.75), (0.5, 0.25)] {
        let coarse = gaussian_field(Grid::line(base)?, gamma, opts.seed, 0);
        let fine = gaussian_field(Grid::line(2 * base)?, gamma, opts.seed, 0);
        let a = schauder_check(&coarse, gamma, theta, &times)?;
        let b = schauder_check(&fine, gamma, theta, &times)?;
        let r1 = b.smoothing_ratio / a.smoothing_ratio;
        let r2 = b.difference_ratio / a.difference_ratio;
        let ok = [r1, r2].iter().all(|r| r.is_finite() && (0.5..=2.0).contains(r));
        checks.push(
            &format!("stability_gamma_{gamma}_theta_{theta}"),
            ok,
            format!("smoothing x{r1:.3}, difference x{r2:.3} under N {base} -> {}", 2 * base),
        );
    }
    Ok(())
}

fn bony(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let (alpha, beta) = (0.7, -0.3);
    let base = if opts.quick { 64 } else { 256 };
    let pairs = if opts.quick { 5 } else { 20 };
    let mut worst_ratio: f64 = 1.0;
    let mut finite = true;
    let mut completeness: f64 = 0.0;
    for s in 0..pairs {
        let seed = opts.seed + s;
        let mut constants = Vec::new();
        for n in [base, 2 * base] {
            let grid = Grid::line(n)?;
            let f = gaussian_field(grid, alpha, seed, 1);
            let g = gaussian_field(grid, beta, seed, 2);
            let (fg, cert) = product(&f, &g, alpha, beta, Condition::Enforce)?;
            constants.push(cert.fitted_constant.unwrap_or(f64::NAN));
            let total = bony_decompose(&f, &g)?.total();
            completeness = completeness.max(relative(total.max_coefficient_distance(&fg), fg.max_coefficient()));
        }
        finite &= constants.iter().all(|c| c.is_finite());
        let r = constants[1] / constants[0];
        worst_ratio = worst_ratio.max(r.max(1.0 / r));
    }
    checks.push("constants_finite", finite, format!("{pairs} seeded pairs"));
    checks.push("constants_stable", worst_ratio <= 2.0, format!("worst ratio under doubling {worst_ratio:.3}"));
    checks.push("completeness", completeness <= 1e-10, format!("worst relative defect {completeness:.3e}"));
    Ok(())
}

fn smooth_u0(grid: Grid) -> SpectralField {
    SpectralField::from_fn(grid, |x| 0.5 * x[0].sin() + 0.2 * (2.0 * x[0]).cos())
}

fn contraction(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let (alpha, beta) = (0.3, -0.2);
    let grid = Grid::line(64)?;
    let nl = Nonlinearity::quadratic(1);
    let u0 = smooth_u0(grid);
    let r0 = besov_norm(&u0, alpha + 1.0);
    let seeds = if opts.quick { 2 } else { 5 };
    for s in 0..seeds {
        let seed = opts.seed + s;
        let b = generate_rough(beta, grid, seed, 4, 1.0)?;
        let fit = fit_contraction_constant(&b, alpha, beta, seed)?;
        let cp = select_rho_t(r0, fit.constant, alpha, beta);
        let mut p = SolverParams::new(alpha, beta, cp.t0, 8);
        p.rho = cp.rho0;
        p.contraction_constant = Some(fit.constant);
        let sol = picard_solve(&u0, &b, &nl, &p)?;
        let worst_q = sol.diagnostics.contraction_factors.iter().copied().fold(0.0, f64::max);
        let wn = weighted_norm(&sol.u, cp.rho0, alpha + 1.0);
        checks.push(
            &format!("picard_seed_{seed}"),
            worst_q < 1.0 && wn <= 2.0 * r0 + p.picard_tol,
            format!("C = {:.3}, rho0 = {}, T0 = {:.3e}, max factor {worst_q:.3e}, weighted norm {wn:.4} vs 2R0 = {:.4}", fit.constant, cp.rho0, cp.t0, 2.0 * r0),
        );

        // seeded pairs inside the ball: ratio below 1 and below the fitted bound
        let times = p.time_grid();
        let mut worst: f64 = 0.0;
        let mut worst_bound: f64 = 0.0;
        for k in 0..if opts.quick { 4 } else { 20 } {
            let pert = |stream: u64| {
                let g = gaussian_field(grid, alpha + 1.5, seed, 100 + stream);
                let g = g.scale(0.25 * r0 / besov_norm(&g, alpha + 1.0));
                TimeField::new(times.clone(), times.iter().map(|t| &sol.u.fields[0] + &g.scale(1.0 - t / cp.t0)).collect())
            };
            let u = pert(2 * k)?;
            let v = pert(2 * k + 1)?;
            if let Some(q) = contraction_probe(&u, &v, &u0, &b, &nl, &p)? {
                let nu = weighted_norm(&u, p.rho, alpha + 1.0);
                let nv = weighted_norm(&v, p.rho, alpha + 1.0);
                let rhs = fit.constant * p.rho.powf(rho_exponent(alpha, beta)) * (1.0 + nu * nu + nv * nv).sqrt();
                worst = worst.max(q);
                worst_bound = worst_bound.max(q / rhs);
            }
        }
        checks.push(
            &format!("probe_seed_{seed}"),
            worst < 1.0 && worst_bound <= 1.0,
            format!("max ratio {worst:.3e}, max ratio / fitted bound {worst_bound:.3e}"),
        );
        let cont = continuity_check(&u0, &b, &nl, &p)?;
        checks.push(
            &format!("continuity_seed_{seed}"),
            cont.holds,
            format!("{:?}: {:.4} <= {:.4}", cont.regime, cont.weighted_norm, cont.bound),
        );
    }
    Ok(())
}

fn oracle(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let (n, steps) = if opts.quick { (64, 16) } else { (256, 64) };
    let grid = Grid::line(n)?;
    let u0 = SpectralField::from_fn(grid, |x| 0.6 * x[0].sin() + 0.3 * (2.0 * x[0]).cos());
    let b = RoughCoefficient::constant(grid, 1.0, 0.1)?;
    let mut errors = Vec::new();
    for s in [steps, 2 * steps] {
        let p = SolverParams::new(0.5, -0.1, 0.1, s);
        let sol = picard_solve(&u0, &b, &Nonlinearity::quadratic(1), &p)?;
        let reference = cole_hopf(&u0, &p.time_grid())?;
        errors.push(compare(&sol.u, &reference)?.max_sup());
    }
    let ratio = errors[0] / errors[1];
    checks.push("cole_hopf_error", errors[0] <= 5e-3, format!("sup error {:.3e} at {steps} steps", errors[0]));
    checks.push("cole_hopf_order", ratio >= 1.8, format!("error ratio {ratio:.3} under step doubling"));
    Ok(())
}

fn bsde(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let grid = Grid::line(64)?;
    let horizon = 0.5;
    let steps = 32;
    let n_paths = if opts.quick { 2000 } else { 10_000 };
    let phi = SpectralField::from_fn(grid, |x| 0.2 * x[0].sin() + 0.1 * (2.0 * x[0]).cos());
    let cases = [
        ("smooth", smooth_coefficient("1 + 0.5*sin(x - t)", grid, 16, horizon)?),
        ("rough", generate_rough(-0.2, grid, opts.seed, 8, horizon)?.scaled(0.03)),
    ];
    for (name, b) in cases {
        let p = SolverParams::new(0.3, -0.2, horizon, steps);
        let problem = BackwardProblem::solve(phi.clone(), b, Nonlinearity::quadratic(1), p)?;
        let paths = simulate_paths(0.0, 1.0, horizon, n_paths, steps, opts.seed)?;
        let sample = virtual_solution(&problem, &paths)?;
        let mt = martingale_test(&sample, 4.0)?;
        checks.push(&format!("{name}_martingale"), mt.passed, format!("{} grid times at k = 4", mt.increments.len()));
        if name == "smooth" {
            let fk = feynman_kac_check(&sample, 1e-8, 4.0);
            checks.push(
                "smooth_feynman_kac",
                fk.passed,
                format!("|Y_t - u(t,x)| = {:.3e}, max |Z - u_x| = {:.3e}", fk.abs_error, fk.max_pathwise_z_gap),
            );
            let cl = classical_check(&sample, &problem.nl, 4.0);
            checks.push("smooth_classical", cl.passed, format!("gap {:.3e} (se {:.3e}, allowance {:.3e})", cl.gap, cl.se, cl.allowance));
        } else {
            checks.push(
                "rough_in_regime",
                problem.warnings().is_empty(),
                format!("warnings: {:?}", problem.warnings()),
            );
        }
    }
    Ok(())
}

fn apriori(checks: &mut Checks, opts: &ValidationOptions) -> Result<()> {
    let (alpha, beta) = (0.3, -0.2);
    let grid = Grid::line(64)?;
    let nl = Nonlinearity::soft_abs(1);
    let u0 = smooth_u0(grid);
    let horizon = if opts.quick { 0.5 } else { 1.0 };
    for s in 0..if opts.quick { 1 } else { 5 } {
        let seed = opts.seed + s;
        let b = generate_rough(beta, grid, seed, 8, horizon)?.scaled(0.05);
        let c = fit_contraction_constant(&b, alpha, beta, seed)?.constant;
        let mut p = SolverParams::new(alpha, beta, horizon, 8);
        p.contraction_constant = Some(c);
        let scan = blow_up_scan(&u0, &b, &nl, &p, 1e6, 10_000)?;
        let kp = SolverParams { n_time_steps: 64, ..p.clone() };
        let bound = apriori_bound(&u0, &b, &nl, &kp)?;
        let peak = scan.norm_trace.iter().map(|x| x.1).fold(0.0, f64::max);
        checks.push(
            &format!("global_seed_{seed}"),
            scan.status == BlowUpStatus::Completed && !bound.diverged && peak <= bound.k,
            format!("{} windows, max norm {peak:.4} <= K = {:.4}", scan.windows.len(), bound.k),
        );
    }
    Ok(())
}

fn parameters(checks: &mut Checks) {
    let mut mismatches = 0;
    for i in 0..100 {
        for j in 0..100 {
            let alpha = (i as f64 + 0.5) / 100.0;
            let beta = -0.6 + 0.7 * j as f64 / 99.0;
            let direct = alpha > 0.0 && alpha < 1.0 && f64::max(-alpha, alpha - 1.0) < beta && beta < 0.0;
            if check_parameters(alpha, beta).passed != direct {
                mismatches += 1;
            }
        }
    }
    checks.push("a2_window", mismatches == 0, format!("{mismatches} mismatches on a 100x100 sweep"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nonsense".parse::<Suite>().is_err());
    }

    #[test]
    fn quick_parameter_suite() {
        let r = run_suite(Suite::Parameters, &ValidationOptions { quick: true, seed: 0 }).unwrap();
        assert!(r.passed);
    }
}
