//! Run manifests: what was run, with which resolved configuration, and the
//! digests of the files it wrote.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const CSV_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Subcommand options and the resolved model/field/run configuration.
    pub inputs: Value,
    pub seeds: Vec<u64>,
    pub threads: usize,
    /// Digest of tool, version, command and inputs; embedded in every output.
    pub hash: String,
    pub wall_clock_secs: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of everything that determines the output.
pub fn input_hash(command: &str, inputs: &Value) -> String {
    let canonical = json!({
        "tool": "lrspin",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": inputs,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing manifest {}", path.display()))
    }
}

/// CSV with a versioned header line carrying the manifest hash. Floats use
/// Rust's shortest round-trip form, independent of locale.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(hash: &str, columns: &[&str]) -> Self {
        Self {
            text: format!("# lrspin-csv {CSV_VERSION} manifest={hash}\n{}\n", columns.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::B(b) => b.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut c = Csv::new("abc", &["x", "y", "z"]);
        c.row(&[Cell::F(0.1), Cell::F(1e-300), Cell::S("a,b".into())]);
        assert_eq!(c.finish(), "# lrspin-csv v1 manifest=abc\nx,y,z\n0.1,1e-300,\"a,b\"\n");
    }

    #[test]
    fn hash_depends_on_inputs_only() {
        let a = input_hash("peierls", &json!({"q": 3}));
        assert_eq!(a, input_hash("peierls", &json!({"q": 3})));
        assert_ne!(a, input_hash("peierls", &json!({"q": 2})));
        assert_eq!(a.len(), 64);
    }
}
