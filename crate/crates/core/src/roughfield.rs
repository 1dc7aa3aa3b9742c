//! Seeded synthetic coefficients `b ∈ L∞_T C^β`.
//!
//! Each time slice is a random Fourier series whose mode `k ≠ 0` carries an
//! independent standard complex Gaussian scaled by `|k|^{-(β + d/2)}`; the
//! mean mode is zero. Randomness comes from ChaCha20 (`rand_chacha`):
//! the key is derived from the user seed, the stream id is the slice index
//! and every mode reads a fixed window of the keystream addressed by a
//! resolution-independent pairing of its wavevector. The same
//! `(seed, slice, k)` therefore gives the same Gaussian pair at every grid
//! size and on every platform, and coarse fields are exact truncations of
//! fine ones.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::spectral::{besov_norm, Grid, SpectralField};

/// Identifier of the Gaussian generator and its stream layout.
pub const GAUSSIAN_GENERATOR_ID: &str = "chacha20/box-muller/fourier-power-law/v1";

/// Keystream words reserved per mode.
const WORDS_PER_MODE: u128 = 8;

/// Piecewise-constant-in-time coefficient `b(t)`.
#[derive(Clone, Debug)]
pub struct RoughCoefficient {
    /// Nominal regularity.
    pub beta: f64,
    /// Slice start times; slice `i` is in force on `[times[i], times[i+1])`.
    pub times: Vec<f64>,
    pub slices: Vec<SpectralField>,
    pub horizon: f64,
    pub seed: u64,
    pub generator_id: String,
    /// `besov_norm(slice, beta)` for every slice, measured at construction.
    pub measured_norms: Vec<f64>,
}

impl RoughCoefficient {
    /// Assembles and validates a coefficient from explicit slices.
    pub fn from_slices(
        beta: f64,
        times: Vec<f64>,
        slices: Vec<SpectralField>,
        horizon: f64,
        seed: u64,
        generator_id: impl Into<String>,
    ) -> Result<Self> {
        if slices.is_empty() || slices.len() != times.len() {
            return Err(Error::InvalidArgument("need one start time per slice and at least one slice".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) || *times.last().unwrap() >= horizon {
            return Err(Error::InvalidArgument("slice times must start at 0, increase strictly and stay below the horizon".into()));
        }
        let grid = *slices[0].grid();
        for s in &slices {
            grid.check_same(s.grid())?;
        }
        let measured_norms = slices.iter().map(|s| besov_norm(s, beta)).collect();
        Ok(Self { beta, times, slices, horizon, seed, generator_id: generator_id.into(), measured_norms })
    }

    /// `b ≡ value` on `[0, horizon]`.
    pub fn constant(grid: Grid, value: f64, horizon: f64) -> Result<Self> {
        Self::from_slices(0.0, vec![0.0], vec![SpectralField::constant(grid, value)], horizon, 0, "constant")
    }

    pub fn zero(grid: Grid, horizon: f64) -> Result<Self> {
        Self::constant(grid, 0.0, horizon)
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    /// Slice in force at time `t` (step lookup, clamped to `[0, horizon]`).
    pub fn at(&self, t: f64) -> &SpectralField {
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        &self.slices[i]
    }

    /// Same coefficient multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            slices: self.slices.iter().map(|s| s.scale(factor)).collect(),
            measured_norms: self.measured_norms.iter().map(|n| n * factor.abs()).collect(),
            generator_id: format!("{}*{factor}", self.generator_id),
            ..self.clone()
        }
    }

    /// `s ↦ b(horizon - s)`, used for backward equations.
    pub fn time_reversed(&self) -> Self {
        let n = self.slices.len();
        let mut times = Vec::with_capacity(n);
        let mut slices = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let end = if i + 1 < n { self.times[i + 1] } else { self.horizon };
            times.push(self.horizon - end);
            slices.push(self.slices[i].clone());
        }
        times[0] = 0.0;
        let measured_norms = self.measured_norms.iter().rev().copied().collect();
        Self { times, slices, measured_norms, generator_id: format!("reversed({})", self.generator_id), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.max_coefficient() == 0.0)
    }
}

/// `max_i besov_norm(b_i, γ)` over the slices.
pub fn ess_sup_norm(b: &RoughCoefficient, gamma: f64) -> f64 {
    b.slices.iter().map(|s| besov_norm(s, gamma)).fold(0.0, f64::max)
}

fn zigzag(k: i64) -> u128 {
    if k >= 0 {
        2 * k as u128
    } else {
        (-2 * k - 1) as u128
    }
}

/// Resolution-independent keystream slot of a canonical wavevector.
fn mode_slot(k: [i64; 2]) -> u128 {
    let a = zigzag(k[0]);
    let b = zigzag(k[1]);
    (a + b) * (a + b + 1) / 2 + b
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard complex Gaussian `(ξ₁ + iξ₂)/√2` for mode slot `slot`.
fn gaussian_pair(rng: &mut ChaCha20Rng, slot: u128) -> Complex64 {
    rng.set_word_pos(slot * WORDS_PER_MODE);
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * th.cos(), r * th.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Gaussian Fourier series with amplitude law `|k|^{-(regularity + d/2)}`.
///
/// This is the raw generator behind [`generate_rough`]; it accepts any
/// regularity so smooth test families (e.g. `C^{0.7}`) use the same
/// construction.
pub fn gaussian_field(grid: Grid, regularity: f64, seed: u64, stream: u64) -> SpectralField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let d = grid.dim() as f64;
    let exponent = -(regularity + d / 2.0);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        if k == [0, 0] || grid.is_nyquist(k) {
            continue;
        }
        let canonical = k[0] > 0 || (k[0] == 0 && k[1] > 0);
        if !canonical {
            continue;
        }
        let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let z = gaussian_pair(&mut rng, mode_slot(k)) * r.powf(exponent);
        coeffs[idx] = z;
        coeffs[grid.flat_index([-k[0], -k[1]])] = z.conj();
    }
    SpectralField::from_raw(grid, coeffs)
}

fn slice_times(n_slices: usize, horizon: f64) -> Vec<f64> {
    (0..n_slices).map(|i| horizon * i as f64 / n_slices as f64).collect()
}

/// Seeded coefficient of nominal regularity `beta ∈ (-1/2, 0)`.
pub fn generate_rough(beta: f64, grid: Grid, seed: u64, n_slices: usize, horizon: f64) -> Result<RoughCoefficient> {
    if !(beta > -0.5 && beta < 0.0) {
        return Err(Error::Parameters(format!(
            "beta = {beta} outside (-1/2, 0) required by assumptions A2/A3"
        )));
    }
    if n_slices == 0 {
        return Err(Error::InvalidArgument("need at least one time slice".into()));
    }
    let slices: Vec<SpectralField> = (0..n_slices as u64)
        .into_par_iter()
        .map(|s| gaussian_field(grid, beta, seed, s))
        .collect();
    RoughCoefficient::from_slices(beta, slice_times(n_slices, horizon), slices, horizon, seed, GAUSSIAN_GENERATOR_ID)
}

/// Coefficient sampled from a closed-form expression in `x`, `y` and `t`.
///
/// Slice `i` samples the expression at its start time.
pub fn smooth_coefficient(expr: &str, grid: Grid, n_slices: usize, horizon: f64) -> Result<RoughCoefficient> {
    if n_slices == 0 {
        return Err(Error::InvalidArgument("need at least one time slice".into()));
    }
    let e = Expr::parse(expr, &["x", "y", "t"])?;
    let times = slice_times(n_slices, horizon);
    let mut slices = Vec::with_capacity(n_slices);
    for &t in &times {
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                e.eval(&[x[0], x[1], t])
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Expression(format!("'{expr}' is not finite on the grid at t = {t}")));
        }
        slices.push(SpectralField::from_physical(grid, &values)?);
    }
    RoughCoefficient::from_slices(0.0, times, slices, horizon, 0, format!("expr:{expr}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_real() {
        let grid = Grid::line(128).unwrap();
        let a = generate_rough(-0.2, grid, 7, 3, 1.0).unwrap();
        let b = generate_rough(-0.2, grid, 7, 3, 1.0).unwrap();
        for (x, y) in a.slices.iter().zip(&b.slices) {
            assert_eq!(x.coefficients(), y.coefficients());
            assert_eq!(x.hermitian_defect(), 0.0);
            assert_eq!(x.mean(), 0.0);
        }
        assert_ne!(a.slices[0], a.slices[1]);
        let c = generate_rough(-0.2, grid, 8, 3, 1.0).unwrap();
        assert_ne!(a.slices[0], c.slices[0]);
    }

    #[test]
    fn coarse_field_is_truncation_of_fine_field() {
        for dim in [1, 2] {
            let coarse = Grid::new(dim, 16, 1.0).unwrap();
            let fine = coarse.with_points(64).unwrap();
            let fc = gaussian_field(coarse, -0.2, 3, 0);
            let ff = gaussian_field(fine, -0.2, 3, 0).resample(16).unwrap();
            assert_eq!(fc.coefficients(), ff.coefficients());
        }
    }

    #[test]
    fn beta_window_enforced() {
        let grid = Grid::line(32).unwrap();
        for beta in [-0.5, 0.0, 0.1, -0.7] {
            assert!(matches!(generate_rough(beta, grid, 1, 1, 1.0), Err(Error::Parameters(_))));
        }
        assert!(generate_rough(-0.2, grid, 1, 0, 1.0).is_err());
    }

    #[test]
    fn single_slice_is_time_constant() {
        let grid = Grid::line(64).unwrap();
        let b = generate_rough(-0.3, grid, 11, 1, 2.0).unwrap();
        assert_eq!(b.at(0.0), b.at(1.99));
        assert_eq!(ess_sup_norm(&b, -0.3), besov_norm(&b.slices[0], -0.3));
        assert_eq!(b.measured_norms[0], besov_norm(&b.slices[0], -0.3));
    }

    #[test]
    fn ess_sup_is_max_over_slices() {
        let grid = Grid::line(16).unwrap();
        let s1 = SpectralField::constant(grid, 1.0);
        let s2 = SpectralField::constant(grid, -3.0);
        let b = RoughCoefficient::from_slices(-0.1, vec![0.0, 0.5], vec![s1, s2], 1.0, 0, "test").unwrap();
        assert_eq!(ess_sup_norm(&b, -0.1), 3.0);
        assert_eq!(b.at(0.25).mean(), 1.0);
        assert_eq!(b.at(0.5).mean(), -3.0);
        assert_eq!(b.at(0.75).mean(), -3.0);
    }

    #[test]
    fn step_lookup_and_reversal() {
        let grid = Grid::line(16).unwrap();
        let slices: Vec<_> = (0..4).map(|i| SpectralField::constant(grid, i as f64)).collect();
        let b = RoughCoefficient::from_slices(-0.1, vec![0.0, 0.25, 0.5, 0.75], slices, 1.0, 0, "test").unwrap();
        let r = b.time_reversed();
        assert_eq!(r.times, vec![0.0, 0.25, 0.5, 0.75]);
        for s in [0.1, 0.3, 0.6, 0.9] {
            assert_eq!(r.at(s).mean(), b.at(1.0 - s).mean());
        }
    }

    #[test]
    fn smooth_expressions() {
        let grid = Grid::line(32).unwrap();
        let one = smooth_coefficient("1", grid, 3, 1.0).unwrap();
        assert!(one.slices.iter().all(|s| s == &SpectralField::constant(grid, 1.0)));
        let sine = smooth_coefficient("sin(x)", grid, 1, 1.0).unwrap();
        let c = sine.slices[0].coefficients();
        assert!((c[1].im + 0.5).abs() < 1e-15 && (c[31].im - 0.5).abs() < 1e-15);
        let nonzero = c.iter().filter(|z| z.norm() > 1e-14).count();
        assert_eq!(nonzero, 2);
        assert!(matches!(smooth_coefficient("sin(x", grid, 1, 1.0), Err(Error::Expression(_))));
        assert!(smooth_coefficient("log(x - 100)", grid, 1, 1.0).is_err());
    }
}
