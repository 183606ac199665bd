//! Run manifests: canonical config hash, effective seed, versions, outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Manifest {
    /// SHA-256 of the canonicalized config (parsed JSON re-serialized with
    /// sorted keys), so formatting changes do not alter the hash.
    pub config_sha256: String,
    /// Seed the run actually used, if the subcommand is seeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: Versions,
    /// File names written next to this manifest.
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub alcove: &'static str,
    pub cli: &'static str,
}

/// Reads a config file and returns its raw text plus the canonical hash.
pub fn read_config(path: &Path) -> Result<(String, String), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| format!("{}: invalid JSON: {e}", path.display()))?;
    // serde_json maps are ordered by key, so this serialization is
    // canonical for any key order and whitespace in the input.
    let canonical = serde_json::to_string(&value).expect("value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok((text, format!("{:x}", hasher.finalize())))
}

/// Creates the output directory and returns a writer closure target.
pub fn prepare_out_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

pub fn write_manifest(
    dir: &Path,
    config_sha256: String,
    seed: Option<u64>,
    outputs: Vec<String>,
) -> Result<(), String> {
    let manifest = Manifest {
        config_sha256,
        seed,
        versions: Versions {
            alcove: alcove::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        },
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_output(dir, "manifest.json", &text)?;
    Ok(())
}
