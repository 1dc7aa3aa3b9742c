//! On-disk formats.
//!
//! A field file is one JSON object: grid shape, `"encoding": "base64-f64le"`
//! and the coefficients in FFT order as interleaved little-endian `(re, im)`
//! doubles, so loading is bit-exact. A coefficient bundle is a directory with
//! `manifest.json` plus one field file per time slice. Every file is written
//! to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mildsolver::{MildSolution, TimeField};
use crate::roughfield::RoughCoefficient;
use crate::spectral::{Grid, SpectralField};

pub const FIELD_FORMAT: &str = "roughpde-field/1";
pub const BUNDLE_FORMAT: &str = "roughpde-bundle/1";

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialises `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    format: String,
    dim: usize,
    points: usize,
    period: f64,
    dtype: String,
    encoding: String,
    coefficients: String,
}

fn encode(coeffs: &[Complex64]) -> String {
    let mut bytes = Vec::with_capacity(coeffs.len() * 16);
    for c in coeffs {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

fn decode(text: &str) -> Result<Vec<Complex64>> {
    let bytes = STANDARD.decode(text).map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Format(format!("payload of {} bytes is not a list of complex doubles", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn field_to_json(f: &SpectralField) -> Result<String> {
    let g = f.grid();
    let file = FieldFile {
        format: FIELD_FORMAT.into(),
        dim: g.dim(),
        points: g.points(),
        period: g.period(),
        dtype: "complex128".into(),
        encoding: "base64-f64le".into(),
        coefficients: encode(f.coefficients()),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

pub fn field_from_json(text: &str) -> Result<SpectralField> {
    let file: FieldFile = serde_json::from_str(text)?;
    if file.format != FIELD_FORMAT || file.dtype != "complex128" || file.encoding != "base64-f64le" {
        return Err(Error::Format(format!(
            "unsupported field file ({}, {}, {})",
            file.format, file.dtype, file.encoding
        )));
    }
    let grid = Grid::new(file.dim, file.points, file.period)?;
    SpectralField::from_coefficients(grid, decode(&file.coefficients)?)
}

pub fn write_field(path: &Path, f: &SpectralField) -> Result<()> {
    write_atomic(path, field_to_json(f)?.as_bytes())
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    field_from_json(&fs::read_to_string(path)?)
}

/// Physical node values as CSV (`x,value` or `x,y,value`).
pub fn physical_csv(f: &SpectralField) -> String {
    let g = f.grid();
    let values = f.to_physical();
    let mut out = String::from(if g.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (i, v) in values.iter().enumerate() {
        let x = g.node(i);
        let _ = match g.dim() {
            1 => writeln!(out, "{:.17e},{v:.17e}", x[0]),
            _ => writeln!(out, "{:.17e},{:.17e},{v:.17e}", x[0], x[1]),
        };
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: String,
    pub grid: Grid,
    pub beta: f64,
    pub horizon: f64,
    pub seed: u64,
    pub generator_id: String,
    pub partition_id: String,
    pub times: Vec<f64>,
    pub measured_norms: Vec<f64>,
    pub slices: Vec<String>,
}

fn slice_name(i: usize) -> String {
    format!("slice_{i:04}.json")
}

/// Writes `b` as a bundle directory and returns its manifest.
pub fn write_bundle(dir: &Path, b: &RoughCoefficient) -> Result<BundleManifest> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(b.slices.len());
    for (i, s) in b.slices.iter().enumerate() {
        let name = slice_name(i);
        write_field(&dir.join(&name), s)?;
        names.push(name);
    }
    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.into(),
        grid: *b.grid(),
        beta: b.beta,
        horizon: b.horizon,
        seed: b.seed,
        generator_id: b.generator_id.clone(),
        partition_id: crate::spectral::PARTITION_ID.into(),
        times: b.times.clone(),
        measured_norms: b.measured_norms.clone(),
        slices: names,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn read_bundle(dir: &Path) -> Result<RoughCoefficient> {
    let manifest: BundleManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format != BUNDLE_FORMAT {
        return Err(Error::Format(format!("unsupported bundle format {}", manifest.format)));
    }
    let slices = manifest
        .slices
        .iter()
        .map(|name| read_field(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    for s in &slices {
        manifest.grid.check_same(s.grid())?;
    }
    RoughCoefficient::from_slices(manifest.beta, manifest.times, slices, manifest.horizon, manifest.seed, manifest.generator_id)
}

/// Writes `u_0000.json, …` for every time node and returns the file names.
pub fn write_time_field(dir: &Path, prefix: &str, u: &TimeField) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    u.fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(format!("{prefix}_{i:04}.json"));
            write_field(&path, f)?;
            Ok(path)
        })
        .collect()
}

/// `t,norm` per time node.
pub fn diagnostics_csv(sol: &MildSolution) -> String {
    let mut out = String::from("t,norm\n");
    for (t, n) in sol.u.times.iter().zip(&sol.diagnostics.step_norms) {
        let _ = writeln!(out, "{t:.17e},{n:.17e}");
    }
    out
}

/// `iteration,residual,contraction_factor` per Picard iteration.
pub fn picard_csv(residuals: &[f64]) -> String {
    let mut out = String::from("iteration,residual,contraction_factor\n");
    for (i, r) in residuals.iter().enumerate() {
        let q = if i > 0 && residuals[i - 1] > 0.0 { format!("{:.17e}", r / residuals[i - 1]) } else { String::new() };
        let _ = writeln!(out, "{},{r:.17e},{q}", i + 1);
    }
    out
}

/// Solution directory: one field file per time plus the two CSV traces.
pub fn write_solution(dir: &Path, sol: &MildSolution) -> Result<()> {
    write_time_field(dir, "u", &sol.u)?;
    write_atomic(&dir.join("diagnostics.csv"), diagnostics_csv(sol).as_bytes())?;
    write_atomic(&dir.join("picard.csv"), picard_csv(&sol.diagnostics.residuals).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roughfield::generate_rough;

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let grid = Grid::new(2, 16, 1.5).unwrap();
        let f = crate::roughfield::gaussian_field(grid, -0.2, 3, 0);
        let back = field_from_json(&field_to_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(field_from_json("{}").is_err());
        let grid = Grid::line(8).unwrap();
        let text = field_to_json(&SpectralField::constant(grid, 1.0)).unwrap().replace("base64-f64le", "hex");
        assert!(matches!(field_from_json(&text), Err(Error::Format(_))));
    }

    #[test]
    fn bundle_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let b = generate_rough(-0.3, Grid::line(32).unwrap(), 8, 3, 1.0).unwrap();
        let manifest = write_bundle(dir.path(), &b).unwrap();
        assert_eq!(manifest.slices.len(), 3);
        let back = read_bundle(dir.path()).unwrap();
        assert_eq!(back.slices, b.slices);
        assert_eq!(back.measured_norms, b.measured_norms);
        assert_eq!(back.times, b.times);
    }

    #[test]
    fn picard_trace_columns() {
        let csv = picard_csv(&[1.0, 0.25]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,1.00000000000000000e0,");
        assert!(lines[2].ends_with("2.50000000000000000e-1"));
    }
}
