//! Run manifests and the comment header every output file starts with.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines a command's output. Two runs with equal
/// manifests write byte-identical files.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: &'static str,
    pub dataset_path: String,
    pub dataset_sha256: String,
    pub params: Value,
}

impl RunManifest {
    pub fn new(command: &'static str, dataset: &Path, params: Value) -> Result<Self> {
        let bytes = std::fs::read(dataset).with_context(|| format!("reading {}", dataset.display()))?;
        Ok(Self {
            command,
            dataset_path: dataset.display().to_string(),
            dataset_sha256: hex::encode(Sha256::digest(&bytes)),
            params,
        })
    }

    fn canonical(&self) -> Value {
        json!({
            "tool": "metatune",
            "version": TOOL_VERSION,
            "command": self.command,
            "dataset": { "path": self.dataset_path, "sha256": self.dataset_sha256 },
            "params": self.params,
        })
    }

    pub fn hash(&self) -> String {
        // serde_json maps are ordered by key, so the encoding is canonical.
        hex::encode(Sha256::digest(self.canonical().to_string().as_bytes()))
    }

    /// `#`-prefixed header lines: tool and version, manifest hash, dataset
    /// and parameters, plus any command-specific notes.
    pub fn header(&self, notes: &[&str]) -> String {
        let mut h = format!(
            "# metatune {TOOL_VERSION} {}\n# manifest {}\n# dataset {} sha256={}\n# params {}\n",
            self.command,
            self.hash(),
            self.dataset_path,
            self.dataset_sha256,
            self.params
        );
        for n in notes {
            h.push_str("# ");
            h.push_str(n);
            h.push('\n');
        }
        h
    }
}

/// Writes one CSV report: manifest header, column row, then records.
pub fn write_report(
    dir: &Path,
    name: &str,
    manifest: &RunManifest,
    notes: &[&str],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    out.write_all(manifest.header(notes).as_bytes())?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(params: Value) -> RunManifest {
        RunManifest {
            command: "tune",
            dataset_path: "d.csv".into(),
            dataset_sha256: "00".into(),
            params,
        }
    }

    #[test]
    fn hash_depends_on_params_only_through_content() {
        let a = manifest(json!({"seed": 1, "trees": 10}));
        let b = manifest(json!({"trees": 10, "seed": 1}));
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), manifest(json!({"seed": 2, "trees": 10})).hash());
    }

    #[test]
    fn header_lines_are_comments() {
        let h = manifest(json!({})).header(&["note"]);
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(h.contains(&manifest(json!({})).hash()));
    }
}
