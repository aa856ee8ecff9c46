//! Result bundles: a directory of output files plus a manifest of their
//! SHA-256 digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}: not a result bundle (no {MANIFEST})")]
    NoManifest(String),
    #[error("manifest line {line} is malformed")]
    Malformed { line: usize },
    #[error("bundle is incomplete")]
    Incomplete,
    #[error("hash mismatch for {0}; the bundle was modified after it was written")]
    HashMismatch(String),
    #[error("{0} is listed in the manifest but missing")]
    Missing(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.display().to_string(), source }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files under one root and records their digests.
pub struct BundleWriter {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl BundleWriter {
    pub fn create(root: &Path) -> Result<Self, BundleError> {
        fs::create_dir_all(root).map_err(io(root))?;
        Ok(BundleWriter { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `rel` uses `/` separators.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), BundleError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io(dir))?;
        }
        fs::write(&path, bytes).map_err(io(&path))?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), BundleError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_csv<R: Serialize>(&mut self, rel: &str, rows: &[R]) -> Result<(), BundleError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| BundleError::Io {
            path: rel.to_string(),
            source: std::io::Error::other(e.to_string()),
        })?;
        self.write(rel, &bytes)
    }

    /// Writes the manifest. An incomplete bundle still lists what was written.
    pub fn finish(self, complete: bool) -> Result<PathBuf, BundleError> {
        let status = if complete { "complete" } else { "incomplete" };
        let mut text = format!("# status: {status}\n");
        for (rel, hash) in &self.files {
            text.push_str(&format!("{hash}  {rel}\n"));
        }
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(io(&path))?;
        Ok(self.root)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub complete: bool,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(root: &Path) -> Result<Self, BundleError> {
        let path = root.join(MANIFEST);
        if !path.exists() {
            return Err(BundleError::NoManifest(root.display().to_string()));
        }
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let mut lines = text.lines();
        let complete = match lines.next() {
            Some("# status: complete") => true,
            Some("# status: incomplete") => false,
            _ => return Err(BundleError::Malformed { line: 1 }),
        };
        let mut files = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let (hash, rel) = line.split_once("  ").ok_or(BundleError::Malformed { line: i + 2 })?;
            files.insert(rel.to_string(), hash.to_string());
        }
        Ok(Manifest { complete, files })
    }

    /// Checks every listed file against its digest.
    pub fn verify(&self, root: &Path) -> Result<(), BundleError> {
        if !self.complete {
            return Err(BundleError::Incomplete);
        }
        for (rel, hash) in &self.files {
            let path = root.join(rel);
            let bytes = fs::read(&path).map_err(|_| BundleError::Missing(rel.clone()))?;
            if &sha256_hex(&bytes) != hash {
                return Err(BundleError::HashMismatch(rel.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = BundleWriter::create(dir.path()).unwrap();
        w.write("a.txt", b"hello").unwrap();
        w.write("sub/b.csv", b"x,y\n1,2\n").unwrap();
        w.finish(true).unwrap();
        let m = Manifest::read(dir.path()).unwrap();
        assert!(m.complete);
        assert_eq!(m.files["a.txt"], sha256_hex(b"hello"));
        m.verify(dir.path()).unwrap();
        fs::write(dir.path().join("sub/b.csv"), b"x,y\n1,3\n").unwrap();
        assert!(matches!(m.verify(dir.path()), Err(BundleError::HashMismatch(ref f)) if f == "sub/b.csv"));
    }

    #[test]
    fn incomplete_bundle_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = BundleWriter::create(dir.path()).unwrap();
        w.write("a.txt", b"x").unwrap();
        w.finish(false).unwrap();
        let m = Manifest::read(dir.path()).unwrap();
        assert!(matches!(m.verify(dir.path()), Err(BundleError::Incomplete)));
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
