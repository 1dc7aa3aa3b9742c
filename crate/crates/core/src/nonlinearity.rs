//! The nonlinearity `F: ℝ^d → ℝ`, its induced field operator and numerical
//! checks of the structural assumptions.
//!
//! Assumption A1: each `∂F/∂x_i` is `L`-Lipschitz and `|∂F/∂x_i(x)| ≤ l(1+|x|)`.
//! Assumption A4: `F` is globally `L̃`-Lipschitz, hence `|F(x)| ≤ l̃(1+|x|)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::paraproduct::padded_points;
use crate::roughfield::gaussian_field;
use crate::spectral::{besov_norm, Grid, SpectralField};

#[derive(Clone, Debug)]
enum Kind {
    Quadratic,
    SoftAbs,
    Sine,
    Custom { f: Expr, grad: Vec<Expr> },
}

/// `F` together with its declared structural constants.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    kind: Kind,
    name: String,
    dim: usize,
    /// Lipschitz constant of each partial derivative (A1).
    pub lip_grad: f64,
    /// Linear-growth constant of the partial derivatives (A1).
    pub lin_growth: f64,
    /// Global Lipschitz constant of `F` (A4), if declared.
    pub global_lip: Option<f64>,
    /// Sub-linear growth constant `l̃` (A4), if declared.
    pub sublin: Option<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Nonlinearity {
    /// `F(x) = |x|²`; the `d = 1` case is the quadratic BSDE driver.
    pub fn quadratic(dim: usize) -> Self {
        Self { kind: Kind::Quadratic, name: "quadratic".into(), dim, lip_grad: 2.0, lin_growth: 2.0, global_lip: None, sublin: None }
    }

    /// `F(x) = √(1 + |x|²) − 1`: satisfies A1 and A4 with `F(0) = 0`.
    pub fn soft_abs(dim: usize) -> Self {
        Self {
            kind: Kind::SoftAbs,
            name: "soft_abs".into(),
            dim,
            lip_grad: 1.0,
            lin_growth: 1.0,
            global_lip: Some(1.0),
            sublin: Some(1.0),
        }
    }

    /// `F(x) = sin(x)` in one dimension.
    pub fn sine() -> Self {
        Self { kind: Kind::Sine, name: "sine".into(), dim: 1, lip_grad: 1.0, lin_growth: 1.0, global_lip: Some(1.0), sublin: Some(1.0) }
    }

    /// User-defined `F` in the expression language (variables `x`, and `y` when `dim = 2`).
    pub fn custom(source: &str, dim: usize, lip_grad: f64, lin_growth: f64) -> Result<Self> {
        let vars: &[&str] = match dim {
            1 => &["x"],
            2 => &["x", "y"],
            _ => return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}"))),
        };
        let f = Expr::parse(source, vars)?;
        let grad = (0..dim).map(|i| f.derivative(i)).collect();
        Ok(Self {
            kind: Kind::Custom { f, grad },
            name: format!("custom:{source}"),
            dim,
            lip_grad,
            lin_growth,
            global_lip: None,
            sublin: None,
        })
    }

    /// Declares A4 constants (`sublin` defaults to `max(L̃, |F(0)|)`).
    pub fn with_global_lip(mut self, global_lip: f64, sublin: Option<f64>) -> Self {
        let f0 = self.f_of_zero().abs();
        self.global_lip = Some(global_lip);
        self.sublin = Some(sublin.unwrap_or(global_lip.max(f0)));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `k = F(0)`.
    pub fn f_of_zero(&self) -> f64 {
        self.eval(&vec![0.0; self.dim])
    }

    pub fn satisfies_a4_declared(&self) -> bool {
        self.global_lip.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Quadratic => x.iter().map(|v| v * v).sum(),
            Kind::SoftAbs => (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt() - 1.0,
            Kind::Sine => x[0].sin(),
            Kind::Custom { f, .. } => f.eval(x),
        }
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Quadratic => out.iter_mut().zip(x).for_each(|(o, v)| *o = 2.0 * v),
            Kind::SoftAbs => {
                let r = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
                out.iter_mut().zip(x).for_each(|(o, v)| *o = v / r);
            }
            Kind::Sine => out[0] = x[0].cos(),
            Kind::Custom { grad, .. } => out.iter_mut().zip(grad).for_each(|(o, g)| *o = g.eval(x)),
        }
    }
}

/// Pointwise composition `F(f)(x) = F(f(x))` for a vector field `f`,
/// evaluated on the 3/2-padded grid and projected back onto the band.
pub fn apply_f(nl: &Nonlinearity, components: &[SpectralField]) -> Result<SpectralField> {
    if components.len() != nl.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} expects {} components, got {}",
            nl.name(),
            nl.dim(),
            components.len()
        )));
    }
    let grid = *components[0].grid();
    for c in components {
        grid.check_same(c.grid())?;
    }
    let m = padded_points(grid.points());
    let phys: Vec<Vec<f64>> = components.iter().map(|c| c.to_padded_physical(m)).collect();
    let mut point = vec![0.0; nl.dim()];
    let values: Vec<f64> = (0..phys[0].len())
        .map(|p| {
            for (slot, comp) in point.iter_mut().zip(&phys) {
                *slot = comp[p];
            }
            nl.eval(&point)
        })
        .collect();
    Ok(SpectralField::from_padded_physical(grid, m, &values))
}

/// `‖F(f) − F(g)‖_α / ((1 + ‖f‖²_α + ‖g‖²_α)^{1/2} ‖f − g‖_α)` for scalar fields.
pub fn composition_ratio(nl: &Nonlinearity, f: &SpectralField, g: &SpectralField, alpha: f64) -> Result<Option<f64>> {
    let ff = apply_f(nl, std::slice::from_ref(f))?;
    let fg = apply_f(nl, std::slice::from_ref(g))?;
    let num = besov_norm(&(&ff - &fg), alpha);
    let diff = besov_norm(&(f - g), alpha);
    if diff == 0.0 {
        return Ok(None);
    }
    let nf = besov_norm(f, alpha);
    let ng = besov_norm(g, alpha);
    Ok(Some(num / ((1.0 + nf * nf + ng * ng).sqrt() * diff)))
}

/// Sampling set-up for assumption checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Points are drawn from the cube `[-radius, radius]^d`.
    pub radius: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Regularity used for the field-level growth check of A4.
    pub alpha: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { radius: 10.0, n_samples: 2000, seed: 0, alpha: 0.3 }
    }
}

/// One measured inequality: `worst_ratio = max(measured / allowed)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub worst_ratio: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: String,
    pub nonlinearity: String,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl AssumptionReport {
    fn new(assumption: &str, nl: &Nonlinearity, checks: Vec<CheckOutcome>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { assumption: assumption.into(), nonlinearity: nl.name().into(), checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const SLACK: f64 = 1.0 + 1e-9;

fn outcome(name: &str, worst_ratio: f64) -> CheckOutcome {
    CheckOutcome { name: name.into(), worst_ratio, passed: worst_ratio.is_finite() && worst_ratio <= SLACK }
}

fn sample_points(dim: usize, opts: &VerifyOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut pts: Vec<Vec<f64>> = (0..opts.n_samples.max(2))
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    opts.radius * (2.0 * u - 1.0)
                })
                .collect()
        })
        .collect();
    // the corners and the origin are where growth conditions are tightest
    pts.push(vec![0.0; dim]);
    pts.push(vec![opts.radius; dim]);
    pts.push(vec![-opts.radius; dim]);
    pts
}

fn gradient_consistency(nl: &Nonlinearity, pts: &[Vec<f64>]) -> CheckOutcome {
    let d = nl.dim();
    let mut g = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for p in pts {
        nl.grad(p, &mut g);
        for i in 0..d {
            let h = 1e-5 * (1.0 + p[i].abs());
            let mut a = p.clone();
            let mut b = p.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (nl.eval(&a) - nl.eval(&b)) / (2.0 * h);
            // ratio against the 1e-5 relative tolerance
            worst = worst.max((fd - g[i]).abs() / (1e-5 * (1.0 + g[i].abs())));
        }
    }
    outcome("gradient_consistency", worst)
}

/// Checks A1 on sampled points and pairs against the declared `L` and `l`.
pub fn verify_a1(nl: &Nonlinearity, opts: &VerifyOptions) -> AssumptionReport {
    let d = nl.dim();
    let pts = sample_points(d, opts);
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    let (mut lip, mut growth, mut incr): (f64, f64, f64) = (0.0, 0.0, 0.0);
    // increment bound |F(a)-F(b)| ≤ c √d l |a-b| (1+|a|²+|b|²)^{1/2}, with c = √2
    let c_incr = std::f64::consts::SQRT_2 * (d as f64).sqrt() * nl.lin_growth;
    for p in &pts {
        nl.grad(p, &mut ga);
        let bound = nl.lin_growth * (1.0 + norm(p));
        growth = growth.max(ga.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / bound);
    }
    for pair in pts.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dist = norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if dist == 0.0 {
            continue;
        }
        nl.grad(a, &mut ga);
        nl.grad(b, &mut gb);
        let dg = ga.iter().zip(&gb).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        lip = lip.max(dg / (nl.lip_grad * dist));
        let rhs = c_incr * dist * (1.0 + norm(a).powi(2) + norm(b).powi(2)).sqrt();
        incr = incr.max((nl.eval(a) - nl.eval(b)).abs() / rhs);
    }
    let checks = vec![
        gradient_consistency(nl, &pts),
        outcome("gradient_lipschitz", lip),
        outcome("gradient_linear_growth", growth),
        outcome("increment_bound", incr),
    ];
    AssumptionReport::new("A1", nl, checks)
}

/// Checks A4 (global Lipschitz, sub-linear growth) pointwise and on fields.
pub fn verify_a4(nl: &Nonlinearity, opts: &VerifyOptions) -> AssumptionReport {
    let Some(global_lip) = nl.global_lip else {
        let checks = vec![CheckOutcome { name: "global_lipschitz_declared".into(), worst_ratio: f64::INFINITY, passed: false }];
        return AssumptionReport::new("A4", nl, checks);
    };
    let sublin = nl.sublin.unwrap_or(global_lip.max(nl.f_of_zero().abs()));
    let d = nl.dim();
    let pts = sample_points(d, opts);
    let (mut lip, mut growth): (f64, f64) = (0.0, 0.0);
    for p in &pts {
        growth = growth.max(nl.eval(p).abs() / (sublin * (1.0 + norm(p))));
    }
    for pair in pts.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dist = norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        if dist > 0.0 {
            lip = lip.max((nl.eval(a) - nl.eval(b)).abs() / (global_lip * dist));
        }
    }
    let mut checks = vec![
        gradient_consistency(nl, &pts),
        outcome("global_lipschitz", lip),
        outcome("sublinear_growth", growth),
    ];
    if d == 1 {
        checks.push(field_sublinear_check(nl, opts));
    }
    AssumptionReport::new("A4", nl, checks)
}

const AMPLITUDES: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];

/// `max ‖F(f)‖_α / (1 + ‖f‖_α)` for seeded `C^{α+1/2}` fields `f` at each
/// amplitude of a fixed ladder.
fn amplitude_ladder(nl: &Nonlinearity, alpha: f64, seed: u64) -> Vec<f64> {
    let grid = Grid::line(64).expect("valid grid");
    AMPLITUDES
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            (0..4u64)
                .map(|s| {
                    let f = gaussian_field(grid, alpha + 0.5, seed.wrapping_add(s), i as u64).scale(a);
                    let ff = apply_f(nl, std::slice::from_ref(&f)).expect("scalar field");
                    besov_norm(&ff, alpha) / (1.0 + besov_norm(&f, alpha))
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Measured constant `c` in `‖F(f)‖_α ≤ c (1 + ‖f‖_α)` for scalar `F`,
/// the worst ratio over the amplitude ladder.
pub fn sublinear_field_constant(nl: &Nonlinearity, alpha: f64, seed: u64) -> f64 {
    if nl.dim() != 1 {
        return nl.sublin.unwrap_or(f64::INFINITY);
    }
    amplitude_ladder(nl, alpha, seed).into_iter().fold(0.0, f64::max)
}

/// `worst_ratio` compares the constant measured at the largest amplitudes
/// with twice the constant measured on the small ones; a sub-linear `F`
/// keeps it bounded while super-linear growth makes it blow up.
fn field_sublinear_check(nl: &Nonlinearity, opts: &VerifyOptions) -> CheckOutcome {
    let ratios = amplitude_ladder(nl, opts.alpha, opts.seed);
    let base = ratios[..3].iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let top = ratios[3..].iter().copied().fold(0.0, f64::max);
    outcome("field_sublinear_growth", top / (2.0 * base))
}
