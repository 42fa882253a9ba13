//! Output files: delimited tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects the files a command writes into one output directory.
#[derive(Debug)]
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Path for `name`, registered as an output.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_rows<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let path = self.file(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Writes `manifest.json` listing every file registered so far.
    pub fn finish<D: Serialize>(
        mut self,
        command: &str,
        config_hash: String,
        summary: String,
        warnings: &[String],
        details: D,
    ) -> Result<Outcome> {
        let path = self.file("manifest.json");
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            outputs: &self.files,
            warnings,
            details,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(Outcome {
            out_dir: self.dir,
            files: self.files,
            summary,
            warnings: warnings.to_vec(),
        })
    }
}

#[derive(Serialize)]
struct Manifest<'a, D> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    outputs: &'a [String],
    warnings: &'a [String],
    details: D,
}

/// What a command produced. Warnings mean the result is usable but degraded.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    /// Human-readable result, one line per item.
    pub summary: String,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn degraded(&self) -> bool {
        !self.warnings.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&("x", 1.0)).unwrap();
        assert_eq!(a, config_hash(&("x", 1.0)).unwrap());
        assert_ne!(a, config_hash(&("x", 1.5)).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(&dir.path().join("o")).unwrap();
        out.write_rows("t.csv", &[(1, 2.5)]).unwrap();
        let o = out.finish("test", "h".into(), String::new(), &[], ()).unwrap();
        assert_eq!(o.files, ["t.csv", "manifest.json"]);
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.out_dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["outputs"][0], "t.csv");
        assert!(!o.degraded());
    }
}
