//! Littlewood-Paley blocks and grid estimates of Besov and Hölder norms.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::partition::{dyadic_weight, num_blocks, PARTITION_ID};
use super::{transform, Direction, SpectralField};
use crate::error::{Error, Result};

/// Regularity exponent of the Besov scale `B^γ_{∞,∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex(pub f64);

impl BesovIndex {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("Besov index must be finite, got {gamma}")));
        }
        Ok(Self(gamma))
    }

    pub fn gamma(self) -> f64 {
        self.0
    }
}

/// Littlewood-Paley blocks `Δ_0 f, …, Δ_J f`.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    pub blocks: Vec<SpectralField>,
    pub partition_id: &'static str,
}

impl DyadicDecomposition {
    /// `Σ_j Δ_j f`.
    pub fn reconstruct(&self) -> SpectralField {
        let mut it = self.blocks.iter();
        let first = it.next().expect("at least one block").clone();
        it.fold(first, |acc, b| &acc + b)
    }

    /// Low-frequency cut-off `S_j f = Σ_{i < j} Δ_i f` (zero for `j <= 0`).
    pub fn partial_sum(&self, j: isize) -> SpectralField {
        let grid = *self.blocks[0].grid();
        let upto = j.clamp(0, self.blocks.len() as isize) as usize;
        self.blocks[..upto]
            .iter()
            .fold(SpectralField::zeros(grid), |acc, b| &acc + b)
    }
}

fn radius(k: [i64; 2]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
}

fn block_coefficients(f: &SpectralField, j: usize) -> Vec<Complex64> {
    let g = f.grid();
    f.coefficients()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.re == 0.0 && c.im == 0.0 {
                *c
            } else {
                c * dyadic_weight(j, radius(g.wavevector(i)))
            }
        })
        .collect()
}

/// Splits `f` into its Littlewood-Paley blocks.
pub fn dyadic_decompose(f: &SpectralField) -> DyadicDecomposition {
    let g = *f.grid();
    let blocks = (0..num_blocks(&g))
        .map(|j| SpectralField::from_raw(g, block_coefficients(f, j)))
        .collect();
    DyadicDecomposition { blocks, partition_id: PARTITION_ID }
}

/// Grid sup-norm of every block, `‖Δ_j f‖_∞` for `j = 0..=J`.
pub fn block_sup_norms(f: &SpectralField) -> Vec<f64> {
    let g = *f.grid();
    (0..num_blocks(&g))
        .map(|j| {
            let mut buf = block_coefficients(f, j);
            if buf.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                return 0.0;
            }
            transform(&mut buf, g.points(), g.dim(), Direction::Inverse);
            buf.iter().fold(0.0_f64, |m, c| m.max(c.re.abs()))
        })
        .collect()
}

/// Estimate of `‖f‖_γ = sup_j 2^{γ j} ‖Δ_j f‖_∞` at grid resolution.
pub fn besov_norm(f: &SpectralField, gamma: f64) -> f64 {
    block_sup_norms(f)
        .into_iter()
        .enumerate()
        .map(|(j, s)| (gamma * j as f64).exp2() * s)
        .fold(0.0, f64::max)
}

/// Grid version of `sup|f| + sup_{0<|h|≤1} |f(x+h) - f(x)| / |h|^α`.
///
/// Offsets range over grid vectors with Euclidean length in `(0, 1]`;
/// only a half-space of offsets is visited since `±h` give the same quotient.
pub fn holder_norm(f: &SpectralField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0,1), got {alpha}")));
    }
    let g = f.grid();
    let n = g.points() as i64;
    let h = g.spacing();
    let values = f.to_physical();
    let sup = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let reach = ((1.0 / h).floor() as i64).min(n / 2);

    let mut offsets = Vec::new();
    match g.dim() {
        1 => offsets.extend((1..=reach).map(|m| [m, 0])),
        _ => {
            for a in 0..=reach {
                for b in -reach..=reach {
                    if a == 0 && b <= 0 {
                        continue;
                    }
                    offsets.push([a, b]);
                }
            }
        }
    }

    let idx = |i0: i64, i1: i64| -> usize {
        match g.dim() {
            1 => i0.rem_euclid(n) as usize,
            _ => (i0.rem_euclid(n) * n + i1.rem_euclid(n)) as usize,
        }
    };
    let mut quotient: f64 = 0.0;
    for m in offsets {
        let len = h * ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
        if len > 1.0 {
            continue;
        }
        let denom = len.powf(alpha);
        let mut worst: f64 = 0.0;
        match g.dim() {
            1 => {
                for i in 0..n {
                    worst = worst.max((values[idx(i + m[0], 0)] - values[idx(i, 0)]).abs());
                }
            }
            _ => {
                for i0 in 0..n {
                    for i1 in 0..n {
                        let d = values[idx(i0 + m[0], i1 + m[1])] - values[idx(i0, i1)];
                        worst = worst.max(d.abs());
                    }
                }
            }
        }
        quotient = quotient.max(worst / denom);
    }
    Ok(sup + quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn cosine(grid: Grid, k: f64, amp: f64) -> SpectralField {
        SpectralField::from_fn(grid, move |x| amp * (k * x[0]).cos())
    }

    #[test]
    fn constant_lives_in_block_zero() {
        let grid = Grid::line(64).unwrap();
        let dec = dyadic_decompose(&SpectralField::constant(grid, 2.5));
        assert_eq!(dec.blocks.len(), 6);
        assert!((dec.blocks[0].mean() - 2.5).abs() < 1e-15);
        for b in &dec.blocks[1..] {
            assert_eq!(b.max_coefficient(), 0.0);
        }
        assert_eq!(besov_norm(&SpectralField::constant(grid, -2.5), 0.7), 2.5);
    }

    #[test]
    fn mode_inside_one_shell_has_one_block() {
        // |k| = 7 lies in [0.75·8, 8], where only φ_3 is nonzero and equals 1.
        let grid = Grid::line(64).unwrap();
        let f = cosine(grid, 7.0, 1.3);
        let sup = block_sup_norms(&f);
        for (j, s) in sup.iter().enumerate() {
            if j == 3 {
                assert!((s - 1.3).abs() < 1e-12);
            } else {
                assert!(*s < 1e-14, "block {j} = {s}");
            }
        }
    }

    #[test]
    fn mode_straddling_two_shells() {
        // |k| = 5: φ_2(5) = ψ(1.25) = 1/2 = φ_3(5).
        let grid = Grid::line(64).unwrap();
        let f = cosine(grid, 5.0, 2.0);
        let half = 0.5;
        for gamma in [-0.4_f64, 0.0, 0.6] {
            let expected = 2.0 * half * f64::max((2.0 * gamma).exp2(), (3.0 * gamma).exp2());
            assert!((besov_norm(&f, gamma) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_in_two_dimensions() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f = SpectralField::from_fn(grid, |x| {
            (2.0 * PI * 15.0 * x[0]).sin() * (2.0 * PI * 15.0 * x[1]).cos() + x[0] * (1.0 - x[0])
        });
        let rec = dyadic_decompose(&f).reconstruct();
        assert!(rec.max_coefficient_distance(&f) < 1e-14);
    }

    #[test]
    fn holder_norm_rejects_bad_exponent() {
        let grid = Grid::line(16).unwrap();
        let f = SpectralField::constant(grid, 1.0);
        assert!(holder_norm(&f, 0.0).is_err());
        assert!(holder_norm(&f, 1.0).is_err());
        assert!((holder_norm(&f, 0.5).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn holder_norm_dominates_sup() {
        let grid = Grid::new(1, 64, 1.0).unwrap();
        let f = SpectralField::from_fn(grid, |x| (2.0 * PI * x[0]).sin());
        let h = holder_norm(&f, 0.4).unwrap();
        assert!(h >= 1.0);
    }
}
