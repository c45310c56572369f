//! Artifact writing. Floats in CSV use `{:.16e}`, JSON is pretty-printed
//! with a trailing newline, so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::LabError;

/// Environment variable overriding `output.dir`.
pub const OUT_ENV: &str = "YAMABE_LAB_OUT";

/// Output root: explicit override, then the environment, then the config.
pub fn output_root(cfg: &RunConfig, cli: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// SHA-256 of the configuration without its output block.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("output");
    }
    let bytes = serde_json::to_vec(&v).expect("value serializes");
    Sha256::digest(&bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// One verb's output directory and the files written into it.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    files: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: PathBuf) -> Result<Self, LabError> {
        fs::create_dir_all(&root).map_err(|e| LabError::io(&root, e))?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<(), LabError> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        }
        fs::write(&path, body).map_err(|e| LabError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), LabError>
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row.as_ref().iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), LabError> {
        let mut body = serde_json::to_string_pretty(value).expect("value serializes");
        body.push('\n');
        self.write(name, body.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, verb: &str, cfg: &RunConfig) -> Result<Vec<String>, LabError> {
        let mut files = self.files.clone();
        files.sort();
        let manifest = json!({
            "verb": verb,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": config_hash(cfg),
            "files": files,
        });
        self.json("manifest.json", &manifest)?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width_scientific() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-3.0e10), "-3.0000000000000000e10");
    }

    #[test]
    fn hash_ignores_output_block() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.n = 4;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn explicit_root_wins() {
        let cfg = RunConfig::default();
        assert_eq!(output_root(&cfg, Some(Path::new("x"))), PathBuf::from("x"));
    }
}
