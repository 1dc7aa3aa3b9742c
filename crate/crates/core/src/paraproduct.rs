//! Products of fields with mixed regularity.
//!
//! Products are computed exactly for the band-limited inputs: both factors
//! are sampled on a 3/2 zero-padded grid, multiplied pointwise and projected
//! back onto the band. The Bony split uses the convention
//! `π_low = Σ_j S_{j-1} f · Δ_j g`, `π_high = Σ_j Δ_j f · S_{j-1} g`,
//! `π_res = Σ_{|i-j| ≤ 1} Δ_i f · Δ_j g` with `S_j = Σ_{i<j} Δ_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{besov_norm, dyadic_decompose, SpectralField};

/// Whether the Young-type condition `γ + δ > 0, δ < 0` is enforced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Condition {
    #[default]
    Enforce,
    /// Skip the check (for experiments outside the product regime).
    Override,
}

/// Measured ingredients of `‖fg‖_δ ≤ c ‖f‖_γ ‖g‖_δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCertificate {
    pub gamma: f64,
    pub delta: f64,
    pub norm_fg_delta: f64,
    pub norm_f_gamma: f64,
    pub norm_g_delta: f64,
    /// `norm_fg_delta / (norm_f_gamma · norm_g_delta)`; `None` when a factor vanishes.
    pub fitted_constant: Option<f64>,
}

impl ProductCertificate {
    pub fn is_degenerate(&self) -> bool {
        self.fitted_constant.is_none()
    }
}

/// Padded grid size used for dealiasing.
pub(crate) fn padded_points(n: usize) -> usize {
    3 * n / 2
}

/// Exact product of two band-limited fields, truncated to the band.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.grid().check_same(g.grid())?;
    let m = padded_points(f.grid().points());
    let a = f.to_padded_physical(m);
    let b = g.to_padded_physical(m);
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(SpectralField::from_padded_physical(*f.grid(), m, &prod))
}

/// Checks `γ + δ > 0` and `δ < 0`.
pub fn check_product_condition(gamma: f64, delta: f64) -> Result<()> {
    if gamma + delta > 0.0 && delta < 0.0 {
        Ok(())
    } else {
        Err(Error::ProductCondition { gamma, delta })
    }
}

/// Product `fg` with `f ∈ C^γ`, `g ∈ C^δ`, plus the measured constant.
pub fn product(
    f: &SpectralField,
    g: &SpectralField,
    gamma: f64,
    delta: f64,
    condition: Condition,
) -> Result<(SpectralField, ProductCertificate)> {
    f.grid().check_same(g.grid())?;
    if condition == Condition::Enforce {
        check_product_condition(gamma, delta)?;
    }
    let fg = dealiased_product(f, g)?;
    let cert = certify(&fg, f, g, gamma, delta);
    Ok((fg, cert))
}

pub(crate) fn certify(
    fg: &SpectralField,
    f: &SpectralField,
    g: &SpectralField,
    gamma: f64,
    delta: f64,
) -> ProductCertificate {
    let norm_fg_delta = besov_norm(fg, delta);
    let norm_f_gamma = besov_norm(f, gamma);
    let norm_g_delta = besov_norm(g, delta);
    let denom = norm_f_gamma * norm_g_delta;
    let fitted_constant = (denom > 0.0).then(|| norm_fg_delta / denom);
    ProductCertificate { gamma, delta, norm_fg_delta, norm_f_gamma, norm_g_delta, fitted_constant }
}

/// The three paraproduct pieces of `fg`.
#[derive(Clone, Debug)]
pub struct BonyParts {
    pub low: SpectralField,
    pub high: SpectralField,
    pub resonant: SpectralField,
}

impl BonyParts {
    pub fn total(&self) -> SpectralField {
        &(&self.low + &self.high) + &self.resonant
    }
}

/// Splits `fg` into low-high, high-low and resonant interactions.
pub fn bony_decompose(f: &SpectralField, g: &SpectralField) -> Result<BonyParts> {
    f.grid().check_same(g.grid())?;
    let grid = *f.grid();
    let m = padded_points(grid.points());
    let df = dyadic_decompose(f);
    let dg = dyadic_decompose(g);
    let nb = df.blocks.len();

    let phys = |blocks: &[SpectralField]| -> Vec<Vec<f64>> {
        blocks.iter().map(|b| b.to_padded_physical(m)).collect()
    };
    let fb = phys(&df.blocks);
    let gb = phys(&dg.blocks);
    let len = fb[0].len();

    // running low-frequency sums S_j, j = 0..nb
    let cumulative = |blocks: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; len]];
        for b in blocks {
            let next: Vec<f64> = out.last().unwrap().iter().zip(b).map(|(s, v)| s + v).collect();
            out.push(next);
        }
        out
    };
    let fs = cumulative(&fb);
    let gs = cumulative(&gb);

    let mut low = vec![0.0; len];
    let mut high = vec![0.0; len];
    let mut res = vec![0.0; len];
    for j in 0..nb {
        if j >= 2 {
            let s_f = &fs[j - 1];
            let s_g = &gs[j - 1];
            for p in 0..len {
                low[p] += s_f[p] * gb[j][p];
                high[p] += fb[j][p] * s_g[p];
            }
        }
        for fi in &fb[j.saturating_sub(1)..(j + 2).min(nb)] {
            for p in 0..len {
                res[p] += fi[p] * gb[j][p];
            }
        }
    }
    let project = |v: &[f64]| SpectralField::from_padded_physical(grid, m, v);
    Ok(BonyParts { low: project(&low), high: project(&high), resonant: project(&res) })
}
