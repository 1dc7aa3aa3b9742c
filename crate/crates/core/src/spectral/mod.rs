//! Band-limited real fields on the periodic domain `[0, L)^d`.
//!
//! A [`SpectralField`] stores the Fourier coefficients `c_k` of
//! `f(x) = Σ_k c_k exp(i 2π k·x / L)` in FFT order. The Nyquist modes are
//! always zero so Hermitian symmetry (`c_{-k} = conj(c_k)`) is exact and
//! the physical field is real.

mod fft;
mod norms;
mod partition;
mod semigroup;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use fft::{index_of, transform, wavenumber, Direction};
pub use norms::{
    besov_norm, block_sup_norms, dyadic_decompose, holder_norm, BesovIndex, DyadicDecomposition,
};
pub use partition::{bump, dyadic_weight, num_blocks, PARTITION_ID};
pub use semigroup::{gradient, heat_propagate, heat_propagate_minus_identity, schauder_check, SchauderReport};

/// Periodic grid: `points^dim` nodes on `[0, period)^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    period: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, points, period })
    }

    /// One-dimensional grid of period `2π`.
    pub fn line(points: usize) -> Result<Self> {
        Self::new(1, points, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    /// Physical frequency `2π k / L` of integer wavenumber `k`.
    pub fn angular(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    /// Same grid with a different number of points per axis.
    pub fn with_points(&self, points: usize) -> Result<Self> {
        Self::new(self.dim, points, self.period)
    }

    /// Signed wavenumber vector of flat index `idx` (unused axes are 0).
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        let n = self.points;
        match self.dim {
            1 => [wavenumber(idx, n), 0],
            _ => [wavenumber(idx / n, n), wavenumber(idx % n, n)],
        }
    }

    /// Flat index of a wavevector (components taken modulo `points`).
    pub fn flat_index(&self, k: [i64; 2]) -> usize {
        let n = self.points;
        match self.dim {
            1 => index_of(k[0], n),
            _ => index_of(k[0], n) * n + index_of(k[1], n),
        }
    }

    /// Whether the wavevector touches the Nyquist frequency on some axis.
    pub fn is_nyquist(&self, k: [i64; 2]) -> bool {
        let half = (self.points / 2) as i64;
        k[..self.dim].iter().any(|&c| c.abs() == half)
    }

    /// Physical coordinates of node `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [idx as f64 * h, 0.0],
            _ => [(idx / self.points) as f64 * h, (idx % self.points) as f64 * h],
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real band-limited field stored by its Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// Field sampled from physical node values.
    pub fn from_physical(grid: Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self::from_padded_physical(grid, grid.points(), values))
    }

    /// Field sampled from a closed-form function of the node coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::from_padded_physical(grid, grid.points(), &values)
    }

    /// Builds a field from raw coefficients, checking the real-field invariants.
    pub fn from_coefficients(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let f = Self { grid, coeffs };
        let scale = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let defect = f.hermitian_defect();
        if defect > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "coefficients are not Hermitian-symmetric (defect {defect:e})"
            )));
        }
        for (idx, c) in f.coeffs.iter().enumerate() {
            if grid.is_nyquist(grid.wavevector(idx)) && c.norm() != 0.0 {
                return Err(Error::InvalidArgument("Nyquist modes must be zero".into()));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
        }
        Ok(f)
    }

    /// Unchecked constructor for coefficient arrays produced by real multipliers.
    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest `|c_{-k} - conj(c_k)|` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|i| {
                let k = g.wavevector(i);
                let j = g.flat_index([-k[0], -k[1]]);
                (self.coeffs[j] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Mean value (the zero mode).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.to_padded_physical(self.grid.points())
    }

    /// Samples the trigonometric polynomial on an `m^d` grid over the same period.
    pub fn to_padded_physical(&self, m: usize) -> Vec<f64> {
        let g = &self.grid;
        let d = g.dim();
        let mut buf = vec![Complex64::new(0.0, 0.0); m.pow(d as u32)];
        let half = (m / 2) as i64;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let k = g.wavevector(idx);
            if k[..d].iter().any(|&v| v.abs() >= half) {
                continue;
            }
            let j = match d {
                1 => index_of(k[0], m),
                _ => index_of(k[0], m) * m + index_of(k[1], m),
            };
            buf[j] = *c;
        }
        transform(&mut buf, m, d, Direction::Inverse);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Projects `m^d` physical samples onto the band of `grid`.
    pub(crate) fn from_padded_physical(grid: Grid, m: usize, values: &[f64]) -> Self {
        let d = grid.dim();
        let total = m.pow(d as u32);
        debug_assert_eq!(values.len(), total);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform(&mut buf, m, d, Direction::Forward);
        let norm = 1.0 / total as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        let half_n = (grid.points() / 2) as i64;
        let half_m = (m / 2) as i64;
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavevector(idx);
            if k[..d].iter().any(|&v| v.abs() >= half_n || v.abs() >= half_m) {
                continue;
            }
            let j = match d {
                1 => index_of(k[0], m),
                _ => index_of(k[0], m) * m + index_of(k[1], m),
            };
            *c = buf[j] * norm;
        }
        let mut f = Self { grid, coeffs };
        f.symmetrize();
        f
    }

    /// Replaces `c_k` by the Hermitian part `(c_k + conj(c_{-k}))/2`.
    fn symmetrize(&mut self) {
        let g = self.grid;
        let src = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let k = g.wavevector(i);
            let j = g.flat_index([-k[0], -k[1]]);
            *c = (src[i] + src[j].conj()) * 0.5;
        }
    }

    /// Same trigonometric polynomial on a grid with `points` per axis
    /// (zero-padded when refining, truncated when coarsening).
    pub fn resample(&self, points: usize) -> Result<Self> {
        let target = self.grid.with_points(points)?;
        let mut out = Self::zeros(target);
        let half = (points / 2) as i64;
        let d = self.grid.dim();
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(idx);
            if k[..d].iter().any(|&v| v.abs() >= half) {
                continue;
            }
            out.coeffs[target.flat_index(k)] = *c;
        }
        Ok(out)
    }

    /// Multiplies every mode by the real symbol `m(k)`; `m` must be even in `k`.
    pub fn apply_symbol(&self, symbol: impl Fn([i64; 2]) -> f64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if c.re == 0.0 && c.im == 0.0 { *c } else { c * symbol(g.wavevector(i)) })
            .collect();
        Self { grid: g, coeffs }
    }

    /// Largest absolute value over the grid nodes.
    pub fn sup_norm(&self) -> f64 {
        self.to_physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficient modulus.
    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluates the trigonometric polynomial at an arbitrary point.
    pub fn eval_at(&self, x: [f64; 2]) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let k = g.wavevector(i);
            let phase = g.angular(k[0]) * x[0] + if g.dim() == 2 { g.angular(k[1]) * x[1] } else { 0.0 };
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect(),
        })
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_coefficient_distance(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs).expect("grid mismatch in field addition")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs).expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        assert!(Grid::new(2, 16, 1.0).is_ok());
    }

    #[test]
    fn physical_roundtrip_of_band_limited_field() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let f = SpectralField::from_fn(grid, |x| {
            (2.0 * PI * x[0]).sin() + 0.25 * (2.0 * PI * (3.0 * x[0] - 2.0 * x[1])).cos()
        });
        let back = SpectralField::from_physical(grid, &f.to_physical()).unwrap();
        assert!(f.max_coefficient_distance(&back) < 1e-14);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn nyquist_mode_is_dropped() {
        let grid = Grid::line(8).unwrap();
        let values: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = SpectralField::from_physical(grid, &values).unwrap();
        assert_eq!(f.max_coefficient(), 0.0);
    }

    #[test]
    fn from_coefficients_rejects_complex_field() {
        let grid = Grid::line(8).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 8];
        c[1] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_coefficients(grid, c.clone()).is_err());
        c[7] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_coefficients(grid, c).is_ok());
    }

    #[test]
    fn eval_at_matches_nodes_and_resample() {
        let grid = Grid::line(32).unwrap();
        let f = SpectralField::from_fn(grid, |x| (3.0 * x[0]).cos() + 0.5 * (x[0]).sin());
        let phys = f.to_physical();
        for i in [0, 5, 17] {
            assert_relative_eq!(f.eval_at(grid.node(i)), phys[i], epsilon = 1e-12);
        }
        let fine = f.resample(128).unwrap();
        assert_relative_eq!(fine.eval_at([0.123, 0.0]), f.eval_at([0.123, 0.0]), epsilon = 1e-12);
        let back = fine.resample(32).unwrap();
        assert!(back.max_coefficient_distance(&f) < 1e-15);
    }
}
