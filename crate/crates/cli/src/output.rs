use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use roughpde::io::{write_atomic, write_json};
use serde::Serialize;

pub const MANIFEST_FORMAT: &str = "roughpde-run/1";
pub const ENV_OUT: &str = "ROUGHPDE_OUT";

/// `--out`, else `$ROUGHPDE_OUT/<command>`, else `./roughpde-out/<command>`.
pub fn out_dir(flag: Option<&Path>, command: &str) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(ENV_OUT).filter(|v| !v.is_empty()) {
            Some(root) => PathBuf::from(root).join(command),
            None => PathBuf::from("roughpde-out").join(command),
        },
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize, R: Serialize> {
    format: &'static str,
    tool_version: &'static str,
    command: &'a str,
    status: &'a str,
    config: &'a C,
    results: &'a R,
}

/// Writes `run.json` (deterministic) and `run.timestamp.json` (wall clock).
pub fn write_manifest<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    status: &str,
    config: &C,
    results: &R,
) -> anyhow::Result<()> {
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        status,
        config,
        results,
    };
    write_json(&dir.join("run.json"), &manifest)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    write_json(&dir.join("run.timestamp.json"), &serde_json::json!({ "finished_unix_seconds": secs }))?;
    Ok(())
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    write_atomic(&dir.join(name), text.as_bytes())?;
    Ok(())
}

/// Verbosity-gated progress on stderr.
#[derive(Clone, Copy)]
pub struct Log {
    pub verbose: u8,
}

impl Log {
    pub fn info(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("roughpde: {}", msg.as_ref());
        }
    }

    pub fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("roughpde: warning: {}", msg.as_ref());
    }
}
