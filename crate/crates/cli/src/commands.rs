use std::fmt::Write as _;
use std::path::Path;

use anyhow::bail;
use roughpde::bsde::{
    classical_check, feynman_kac_check, martingale_test, simulate_paths, virtual_solution, BackwardProblem, ClassicalReport,
    FeynmanKacReport, MartingaleReport, VirtualSolutionSample,
};
use roughpde::io::{self, write_json};
use roughpde::mildsolver::{
    apriori_bound, blow_up_scan, fit_contraction_constant, picard_solve, select_rho_t, AprioriBound, BlowUpReport,
    ConstantFit, ContractionParams, SolverParams,
};
use roughpde::oracle::{compare, cole_hopf, crank_nicolson, refinement_slopes, CrankNicolsonOptions};
use roughpde::roughfield::{ess_sup_norm, RoughCoefficient};
use roughpde::spectral::besov_norm;
use roughpde::validation::{run_suite, Suite, SuiteReport, ValidationOptions};
use roughpde::{Error, SpectralField};
use serde::Serialize;

use crate::config::{
    BsdeConfig, CoefficientSpec, CompareConfig, ConfigError, GenerateConfig, NonlinearitySpec, OracleKind, SolveConfig,
};
use crate::output::{write_manifest, write_text, Log};

#[derive(Serialize)]
struct GenerateResults {
    bundle: &'static str,
    slices: usize,
    measured_norms: Vec<f64>,
    ess_sup_norm: f64,
}

pub fn generate(config: &GenerateConfig, out: &Path, log: Log) -> anyhow::Result<()> {
    let grid = config.grid.build()?;
    if let CoefficientSpec::Bundle { .. } = config.coefficient {
        bail!(ConfigError("generate builds a new bundle; a bundle source makes no sense here".into()));
    }
    let b = config.coefficient.build(grid, config.horizon)?;
    log.info(format!("writing {} slices to {}", b.slices.len(), out.display()));
    let manifest = io::write_bundle(&out.join("bundle"), &b)?;
    let results = GenerateResults {
        bundle: "bundle",
        slices: manifest.slices.len(),
        ess_sup_norm: ess_sup_norm(&b, b.beta),
        measured_norms: manifest.measured_norms,
    };
    write_manifest(out, "generate", "ok", config, &results)
}

#[derive(Serialize)]
struct SolveResults {
    initial_norm: f64,
    contraction_fit: Option<ConstantFit>,
    selected: Option<ContractionParams>,
    rho: f64,
    iterations: usize,
    residuals: Vec<f64>,
    max_contraction_factor: Option<f64>,
    residuals_monotone: bool,
    fixed_point_residual: f64,
    final_norm: f64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ScanResults {
    initial_norm: f64,
    contraction_fit: Option<ConstantFit>,
    scan: BlowUpReport,
    apriori: Option<AprioriBound>,
    bounded_by_apriori: Option<bool>,
}

/// Fits `C` unless it is given or `b` vanishes.
fn fit_constant(b: &RoughCoefficient, p: &mut SolverParams, log: Log) -> anyhow::Result<Option<ConstantFit>> {
    if p.contraction_constant.is_some() {
        return Ok(None);
    }
    if b.is_zero() {
        p.contraction_constant = Some(0.0);
        return Ok(None);
    }
    let fit = fit_contraction_constant(b, p.alpha, p.beta, 0)?;
    log.info(format!("fitted contraction constant C = {:.4e}", fit.constant));
    p.contraction_constant = Some(fit.constant);
    Ok(Some(fit))
}

pub fn solve(config: &SolveConfig, out: &Path, log: Log) -> anyhow::Result<()> {
    let grid = config.grid.build()?;
    let mut p = config.solver.params(config.alpha, config.beta, config.horizon);
    p.validate()?;
    let nl = config.nonlinearity.build(grid.dim())?;
    let b = config.coefficient.build(grid, config.horizon)?;
    let u0 = config.initial.build(grid)?;
    let initial_norm = besov_norm(&u0, config.alpha + 1.0);
    let contraction_fit = fit_constant(&b, &mut p, log)?;

    if let Some(cont) = &config.continuation {
        let scan = blow_up_scan(&u0, &b, &nl, &p, cont.ceiling, cont.max_windows)?;
        log.info(format!("{} windows, reached t = {}", scan.windows.len(), scan.t_reached));
        let apriori = if cont.apriori { Some(apriori_bound(&u0, &b, &nl, &p)?) } else { None };
        let bounded_by_apriori = apriori.as_ref().map(|a| !a.diverged && scan.norm_trace.iter().all(|x| x.1 <= a.k));
        let mut csv = String::from("t,norm\n");
        for (t, n) in &scan.norm_trace {
            let _ = writeln!(csv, "{t:.17e},{n:.17e}");
        }
        write_text(out, "scan.csv", &csv)?;
        let results = ScanResults { initial_norm, contraction_fit, scan, apriori, bounded_by_apriori };
        return write_manifest(out, "solve", "ok", config, &results);
    }

    let selected = match config.solver.rho {
        Some(_) => None,
        None => {
            let cp = select_rho_t(initial_norm, p.contraction_constant.unwrap_or(0.0), p.alpha, p.beta);
            p.rho = cp.rho0;
            log.info(format!("rho0 = {}, T0 = {:.4e}", cp.rho0, cp.t0));
            Some(cp)
        }
    };
    let sol = match picard_solve(&u0, &b, &nl, &p) {
        Ok(sol) => sol,
        Err(Error::NonConvergence { iterations, last_residual, residuals }) => {
            write_text(out, "picard.csv", &io::picard_csv(&residuals))?;
            let trace = serde_json::json!({ "iterations": iterations, "residuals": residuals });
            write_manifest(out, "solve", "non_convergence", config, &trace)?;
            return Err(Error::NonConvergence { iterations, last_residual, residuals }.into());
        }
        Err(e @ Error::NormExplosion { .. }) => {
            write_manifest(out, "solve", "norm_explosion", config, &serde_json::json!({ "error": e.to_string() }))?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    for w in &sol.diagnostics.warnings {
        log.warn(w);
    }
    io::write_solution(out, &sol)?;
    let d = &sol.diagnostics;
    let results = SolveResults {
        initial_norm,
        contraction_fit,
        selected,
        rho: d.rho,
        iterations: d.iterations,
        residuals: d.residuals.clone(),
        max_contraction_factor: d.contraction_factors.iter().copied().reduce(f64::max),
        residuals_monotone: d.residuals_monotone,
        fixed_point_residual: d.fixed_point_residual,
        final_norm: d.step_norms.last().copied().unwrap_or(initial_norm),
        warnings: d.warnings.clone(),
    };
    log.info(format!("converged in {} iterations", d.iterations));
    write_manifest(out, "solve", "ok", config, &results)
}

#[derive(Serialize)]
struct BsdeReport {
    n_paths: usize,
    n_times: usize,
    wrap_events: usize,
    second_moments: (f64, f64),
    pde_warnings: Vec<String>,
    martingale_passed: bool,
    feynman_kac: FeynmanKacReport,
    classical: Option<ClassicalReport>,
}

fn martingale_csv(m: &MartingaleReport) -> String {
    let mut out = String::from("statistic,t,mean,se,passed\n");
    for (name, rows) in [("increment", &m.increments), ("residual", &m.residuals)] {
        for r in rows {
            let _ = writeln!(out, "{name},{:.17e},{:.17e},{:.17e},{}", r.t, r.mean, r.se, r.passed);
        }
    }
    out
}

fn paths_csv(sample: &VirtualSolutionSample) -> String {
    let m = sample.n_times();
    let mut out = String::from("path,t,y,z,w,u,u_x\n");
    for p in 0..sample.n_paths {
        for i in 0..m {
            let j = p * m + i;
            let _ = writeln!(
                out,
                "{p},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                sample.times[i], sample.y[j], sample.z[j], sample.w[j], sample.u[j], sample.u_x[j]
            );
        }
    }
    out
}

pub fn bsde(config: &BsdeConfig, out: &Path, log: Log) -> anyhow::Result<()> {
    let grid = config.grid.build()?;
    if grid.dim() != 1 {
        bail!(ConfigError("the BSDE driver is one-dimensional".into()));
    }
    let mut p = config.solver.params(config.alpha, config.beta, config.horizon);
    p.validate()?;
    let nl = config.nonlinearity.build(1)?;
    let b = config.coefficient.build(grid, config.horizon)?;
    let phi = config.terminal.build(grid)?;
    fit_constant(&b, &mut p, log)?;
    let dt = config.horizon / p.n_time_steps as f64;
    let k0 = (config.t / dt).round();
    if !(config.t >= 0.0 && config.t < config.horizon) || (k0 * dt - config.t).abs() > 1e-9 * config.horizon {
        bail!(ConfigError(format!("start time {} must be a node of the time grid on [0, {})", config.t, config.horizon)));
    }
    let n_steps = p.n_time_steps - k0 as usize;

    let problem = BackwardProblem::solve(phi, b, nl, p)?;
    for w in problem.warnings() {
        log.warn(w);
    }
    let paths = simulate_paths(config.t, config.x, config.horizon, config.n_paths, n_steps, config.seed)?;
    log.info(format!("simulated {} paths over {n_steps} steps", config.n_paths));
    let sample = virtual_solution(&problem, &paths)?;
    let mt = martingale_test(&sample, config.k)?;
    let fk = feynman_kac_check(&sample, config.fk_tolerance, config.k);
    let smooth = matches!(config.coefficient, CoefficientSpec::Smooth { .. } | CoefficientSpec::Constant { .. });
    let classical = smooth.then(|| classical_check(&sample, &problem.nl, config.k));

    write_text(out, "summary.csv", &sample.summary_csv())?;
    write_text(out, "martingale.csv", &martingale_csv(&mt))?;
    if config.write_paths {
        write_text(out, "paths.csv", &paths_csv(&sample))?;
    }
    let report = BsdeReport {
        n_paths: sample.n_paths,
        n_times: sample.n_times(),
        wrap_events: sample.wrap_events,
        second_moments: sample.second_moments,
        pde_warnings: problem.warnings().to_vec(),
        martingale_passed: mt.passed,
        feynman_kac: fk,
        classical,
    };
    write_json(&out.join("report.json"), &report)?;
    let summary = serde_json::json!({
        "martingale_passed": report.martingale_passed,
        "feynman_kac_passed": report.feynman_kac.passed,
        "classical_passed": report.classical.as_ref().map(|c| c.passed),
        "y_start": report.feynman_kac.y_start,
        "u_start": report.feynman_kac.u_start,
    });
    write_manifest(out, "bsde", "ok", config, &summary)
}

#[derive(Serialize)]
struct CompareRow {
    steps: usize,
    max_sup_err: f64,
    file: String,
}

#[derive(Serialize)]
struct CompareResults {
    oracle_self_check: Vec<f64>,
    rows: Vec<CompareRow>,
    slopes: Vec<f64>,
    ratios: Vec<f64>,
}

pub fn compare_oracle(config: &CompareConfig, out: &Path, log: Log) -> anyhow::Result<()> {
    let grid = config.grid.build()?;
    if grid.dim() != 1 {
        bail!(ConfigError("oracles are one-dimensional".into()));
    }
    if config.steps.is_empty() {
        bail!(ConfigError("`steps` needs at least one entry".into()));
    }
    if config.oracle == OracleKind::ColeHopf
        && (config.nonlinearity != NonlinearitySpec::Quadratic
            || config.coefficient != (CoefficientSpec::Constant { value: 1.0 }))
    {
        bail!(ConfigError("the Cole-Hopf oracle needs the quadratic nonlinearity and b = 1".into()));
    }
    let nl = config.nonlinearity.build(1)?;
    let b = config.coefficient.build(grid, config.horizon)?;
    let u0: SpectralField = config.initial.build(grid)?;

    let mut rows = Vec::new();
    let mut self_checks = Vec::new();
    for &steps in &config.steps {
        let mut p = SolverParams::new(config.alpha, config.beta, config.horizon, steps);
        p.picard_tol = config.picard_tol;
        let sol = picard_solve(&u0, &b, &nl, &p)?;
        let times = p.time_grid();
        let reference = match config.oracle {
            OracleKind::ColeHopf => cole_hopf(&u0, &times)?,
            OracleKind::CrankNicolson => crank_nicolson(&u0, &b, &nl, &times, &CrankNicolsonOptions::for_grid(&grid))?,
        };
        self_checks.push(reference.self_check);
        let report = compare(&sol.u, &reference)?;
        let file = format!("errors_{steps}.csv");
        write_text(out, &file, &report.to_csv())?;
        log.info(format!("{steps} steps: sup error {:.4e}", report.max_sup()));
        rows.push(CompareRow { steps, max_sup_err: report.max_sup(), file });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.max_sup_err).collect();
    let slopes = refinement_slopes(&errors);
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let mut csv = String::from("steps,max_sup_err,ratio_to_previous,slope_to_previous\n");
    for (i, r) in rows.iter().enumerate() {
        let (q, s) = if i == 0 { (String::new(), String::new()) } else {
            (format!("{:.17e}", ratios[i - 1]), format!("{:.17e}", slopes[i - 1]))
        };
        let _ = writeln!(csv, "{},{:.17e},{q},{s}", r.steps, r.max_sup_err);
    }
    write_text(out, "slopes.csv", &csv)?;
    write_manifest(out, "compare", "ok", config, &CompareResults { oracle_self_check: self_checks, rows, slopes, ratios })
}

#[derive(Serialize)]
struct ValidateConfig<'a> {
    suites: &'a [Suite],
    quick: bool,
    seed: u64,
}

/// Runs the suites, prints one line per check and reports overall success.
pub fn validate(suites: &[Suite], opts: &ValidationOptions, out: &Path, log: Log) -> anyhow::Result<bool> {
    let mut reports: Vec<SuiteReport> = Vec::with_capacity(suites.len());
    for &suite in suites {
        log.info(format!("running {suite}"));
        let report = run_suite(suite, opts)?;
        for c in &report.checks {
            println!("{} {suite}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    println!("{}", if passed { "all checks passed" } else { "some checks failed" });
    write_json(&out.join("report.json"), &reports)?;
    let config = ValidateConfig { suites, quick: opts.quick, seed: opts.seed };
    write_manifest(out, "validate", if passed { "ok" } else { "failed" }, &config, &serde_json::json!({ "passed": passed }))?;
    Ok(passed)
}
