//! Heat semigroup, spectral gradient and the Schauder-ratio probe.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::norms::besov_norm;
use super::SpectralField;
use crate::error::{Error, Result};

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `P_t f`: mode `k` is damped by `exp(-|2πk/L|² t)`.
pub fn heat_propagate(f: &SpectralField, t: f64) -> Result<SpectralField> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let g = *f.grid();
    Ok(f.apply_symbol(|k| {
        let kk = g.angular(k[0]).powi(2) + g.angular(k[1]).powi(2);
        (-kk * t).exp()
    }))
}

/// `(P_t - 1) f`.
pub fn heat_propagate_minus_identity(f: &SpectralField, t: f64) -> Result<SpectralField> {
    check_time(t)?;
    let g = *f.grid();
    Ok(f.apply_symbol(|k| {
        let kk = g.angular(k[0]).powi(2) + g.angular(k[1]).powi(2);
        (-kk * t).exp_m1()
    }))
}

/// Spectral gradient `∇f`, one field per axis.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    let g = *f.grid();
    (0..g.dim())
        .map(|axis| {
            let coeffs = f
                .coefficients()
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, g.angular(g.wavevector(i)[axis])))
                .collect();
            SpectralField::from_raw(g, coeffs)
        })
        .collect()
}

/// Worst-case Schauder ratios over a set of times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchauderReport {
    /// `max_t t^θ ‖P_t g‖_{γ+2θ} / ‖g‖_γ`.
    pub smoothing_ratio: f64,
    /// `max_t t^{-θ} ‖(P_t - 1) g‖_{γ-2θ} / ‖g‖_γ`.
    pub difference_ratio: f64,
    /// Set when `‖g‖_γ = 0`; both ratios are then reported as 0.
    pub degenerate: bool,
}

/// Measures both Schauder ratios of `g` on the given positive times.
pub fn schauder_check(g: &SpectralField, gamma: f64, theta: f64, t_grid: &[f64]) -> Result<SchauderReport> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be >= 0, got {theta}")));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidArgument(format!("Schauder times must be positive, got {t}")));
    }
    let base = besov_norm(g, gamma);
    if base == 0.0 {
        return Ok(SchauderReport { smoothing_ratio: 0.0, difference_ratio: 0.0, degenerate: true });
    }
    let mut smoothing: f64 = 0.0;
    let mut difference: f64 = 0.0;
    for &t in t_grid {
        let pt = heat_propagate(g, t)?;
        smoothing = smoothing.max(t.powf(theta) * besov_norm(&pt, gamma + 2.0 * theta) / base);
        let dt = heat_propagate_minus_identity(g, t)?;
        difference = difference.max(t.powf(-theta) * besov_norm(&dt, gamma - 2.0 * theta) / base);
    }
    Ok(SchauderReport { smoothing_ratio: smoothing, difference_ratio: difference, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn heat_identity_and_constants() {
        let grid = Grid::line(32).unwrap();
        let f = SpectralField::from_fn(grid, |x| x[0].sin() + 0.1 * (4.0 * x[0]).cos());
        assert_eq!(heat_propagate(&f, 0.0).unwrap(), f);
        let c = SpectralField::constant(grid, 3.0);
        assert_eq!(heat_propagate(&c, 5.0).unwrap(), c);
        assert!(heat_propagate(&f, -1e-3).is_err());
    }

    #[test]
    fn heat_single_mode_decay() {
        let grid = Grid::new(1, 32, 2.0).unwrap();
        let kappa = 2.0 * PI * 3.0 / 2.0;
        let f = SpectralField::from_fn(grid, |x| (kappa * x[0]).sin());
        let t = 0.013;
        let pt = heat_propagate(&f, t).unwrap();
        let expected = SpectralField::from_fn(grid, |x| (-kappa * kappa * t).exp() * (kappa * x[0]).sin());
        assert!(pt.max_coefficient_distance(&expected) < 1e-15);
    }

    #[test]
    fn gradient_of_sine() {
        let grid = Grid::new(1, 32, 3.0).unwrap();
        let w = 2.0 * PI / 3.0;
        let f = SpectralField::from_fn(grid, |x| (w * x[0]).sin());
        let df = gradient(&f);
        let expected = SpectralField::from_fn(grid, |x| w * (w * x[0]).cos());
        assert_eq!(df.len(), 1);
        assert!(df[0].max_coefficient_distance(&expected) < 1e-14);
        assert_eq!(gradient(&SpectralField::constant(grid, 4.0))[0].max_coefficient(), 0.0);
    }

    #[test]
    fn schauder_degenerate_and_theta_zero() {
        let grid = Grid::line(64).unwrap();
        let zero = SpectralField::zeros(grid);
        assert!(schauder_check(&zero, 0.0, 0.5, &[0.1]).unwrap().degenerate);
        let f = SpectralField::from_fn(grid, |x| x[0].sin() + (9.0 * x[0]).cos());
        let r = schauder_check(&f, -0.2, 0.0, &[1e-3, 1e-2, 0.1, 1.0]).unwrap();
        assert!(r.smoothing_ratio <= 1.0 + 1e-12);
        assert!(schauder_check(&f, 0.0, 0.5, &[]).is_err());
        assert!(schauder_check(&f, 0.0, -0.5, &[0.1]).is_err());
    }
}
