//! CSV emission and run manifests.
//!
//! Every output file is written to a temporary sibling and renamed into
//! place, then described by a `<file>.manifest.json` written the same way.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Environment variable naming the directory for outputs given without a
/// path.
pub const OUT_DIR_ENV: &str = "COUPLED_GINIBRE_OUT_DIR";

/// Digest of one output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Metadata written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp_utc: String,
    pub command_line: Vec<String>,
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub outputs: Vec<FileDigest>,
}

/// Formats a value with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Resolves `--out`: an explicit path wins; otherwise `default_name` inside
/// the directory named by [`OUT_DIR_ENV`], or the working directory.
pub fn resolve_out(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")).join(default_name)
    })
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Builds CSV bytes from a header and rows of already formatted fields.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    Ok(writer.into_inner().map_err(|e| anyhow::anyhow!("flushing CSV: {e}"))?)
}

/// Path of the manifest belonging to `output`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `path` and its manifest; returns the manifest.
pub fn emit(
    path: &Path,
    bytes: &[u8],
    config: Option<&RunConfig>,
    seed: Option<u64>,
    samples: Option<usize>,
) -> Result<RunManifest> {
    write_atomic(path, bytes)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_utc: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        command_line: std::env::args().collect(),
        config: config.cloned(),
        seed,
        samples,
        outputs: vec![FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) }],
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&manifest_path(path), &json)?;
    Ok(manifest)
}

/// Reads a manifest file.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_slice(&text).with_context(|| format!("parsing manifest {}", path.display()))
}
