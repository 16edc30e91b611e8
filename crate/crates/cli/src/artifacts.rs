//! Output files. Every CSV starts with `#` comment lines carrying the spec
//! hash and seed; the body below them depends only on spec and seed, so
//! reruns reproduce it byte for byte. Wall-clock data goes to the JSON
//! manifest only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn version_string() -> String {
    match option_env!("MDPSM_GIT_DESCRIBE") {
        Some(rev) => format!("mdpsm {} ({rev})", env!("CARGO_PKG_VERSION")),
        None => format!("mdpsm {}", env!("CARGO_PKG_VERSION")),
    }
}

pub fn spec_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: String,
    pub kind: &'a str,
    pub spec_sha256: &'a str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub artifacts: Vec<String>,
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(format!("creating {}", root.display()), e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| CliError::io(format!("writing {}", p.display()), e))?;
        Ok(p)
    }

    pub fn write_csv(&self, name: &str, hash: &str, seed: Option<u64>, body: &str) -> Result<PathBuf, CliError> {
        let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let text = format!("# {}\n# spec_sha256: {hash}\n# seed: {seed}\n{body}", version_string());
        self.write(name, &text)
    }

    pub fn write_manifest(&self, name: &str, manifest: &Manifest<'_>) -> Result<PathBuf, CliError> {
        let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        self.write(name, &(json + "\n"))
    }
}
