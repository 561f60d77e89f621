//! Run manifests: resolved options plus SHA-256 digests of every file read or written.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let path = fs::canonicalize(path).with_context(|| format!("resolving {}", path.display()))?;
        Ok(Self {
            sha256: sha256_file(&path)?,
            path,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub options: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_time_s: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Recomputes every recorded digest; lists the files that changed.
    pub fn verify(&self) -> Result<()> {
        let mut bad = Vec::new();
        for f in self.inputs.iter().chain(&self.outputs) {
            match sha256_file(&f.path) {
                Ok(d) if d == f.sha256 => {}
                Ok(_) => bad.push(format!("{} (digest changed)", f.path.display())),
                Err(_) => bad.push(format!("{} (unreadable)", f.path.display())),
            }
        }
        if !bad.is_empty() {
            bail!("manifest check failed: {}", bad.join(", "));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn verify_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("data.csv");
        fs::write(&p, "a,b\n1,2\n").unwrap();
        let m = RunManifest {
            subcommand: "design".into(),
            options: serde_json::Value::Null,
            seed: 1,
            threads: 1,
            tool_version: "0".into(),
            inputs: vec![],
            outputs: vec![FileDigest::of(&p).unwrap()],
            wall_time_s: 0.0,
        };
        m.verify().unwrap();
        fs::write(&p, "a,b\n1,3\n").unwrap();
        assert!(m.verify().is_err());
    }
}
