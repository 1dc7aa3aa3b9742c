//! The concrete dyadic partition of unity.
//!
//! `ψ` is a C∞ bump equal to 1 on `[0, 1]` and 0 on `[3/2, ∞)`, built from
//! the `exp(-1/x)` mollifier. Block weights are `φ_0(ξ) = ψ(|ξ|)` and
//! `φ_j(ξ) = ψ(2^{-j}|ξ|) - ψ(2^{-j+1}|ξ|)`, with `ξ` measured in units of
//! the base mode `2π/L` (i.e. `ξ` is the integer wavevector).

use super::Grid;

/// Identifier recorded with every decomposition.
pub const PARTITION_ID: &str = "exp-mollifier-bump[1,3/2]/dyadic";

fn mollifier(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = mollifier(x);
        a / (a + mollifier(1.0 - x))
    }
}

/// The radial bump `ψ(r)`.
pub fn bump(r: f64) -> f64 {
    1.0 - smooth_step(2.0 * (r - 1.0))
}

/// `φ_j` evaluated at radius `r` (in base-mode units).
pub fn dyadic_weight(j: usize, r: f64) -> f64 {
    if j == 0 {
        bump(r)
    } else {
        let s = (j as f64).exp2();
        bump(r / s) - bump(2.0 * r / s)
    }
}

/// Number of blocks needed so that `Σ_j φ_j = 1` on every grid mode.
///
/// The largest retained radius is `N/2 - 1` in 1-D and `√2 (N/2 - 1)` in
/// 2-D, so one extra block is used in two dimensions.
pub fn num_blocks(grid: &Grid) -> usize {
    let jmax = (grid.points() / 2).trailing_zeros() as usize;
    jmax + 1 + usize::from(grid.dim() == 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_plateau_and_support() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(1.5), 0.0);
        assert_eq!(bump(7.0), 0.0);
        let mid = bump(1.25);
        assert!((mid - 0.5).abs() < 1e-15, "symmetric midpoint, got {mid}");
    }

    #[test]
    fn weights_sum_to_one_inside_band() {
        for r in [0.0, 1.0, 2.5, 5.0, 6.0, 13.7, 31.0, 63.0] {
            let total: f64 = (0..=6).map(|j| dyadic_weight(j, r)).sum();
            assert!((total - 1.0).abs() < 1e-15, "r = {r}: {total}");
        }
    }

    #[test]
    fn weights_are_nonnegative() {
        for i in 0..2000 {
            let r = i as f64 * 0.05;
            for j in 0..8 {
                assert!(dyadic_weight(j, r) >= -1e-16);
            }
        }
    }
}
