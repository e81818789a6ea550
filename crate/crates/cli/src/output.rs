//! Buffered data files and the run manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Format;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Collects outputs; files are written together by [`Emitter::finish`].
pub struct Emitter {
    out: Option<PathBuf>,
    seed: u64,
    format: Format,
    files: BTreeMap<String, String>,
    checks: Vec<Check>,
}

/// Writes to stdout; a closed pipe is not an error.
fn emit_stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Emitter {
    pub fn new(out: Option<PathBuf>, seed: u64, format: Format) -> Self {
        Self { out, seed, format, files: BTreeMap::new(), checks: Vec::new() }
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: &str) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    fn add(&mut self, name: &str, content: String) -> std::io::Result<()> {
        if self.files.insert(name.to_string(), content).is_some() {
            return Err(std::io::Error::other(format!("{name} emitted twice")));
        }
        Ok(())
    }

    /// CSV with a leading `# seed=` comment.
    pub fn data(&mut self, name: &str, csv: &str) -> std::io::Result<()> {
        self.add(name, format!("# seed={}\n{csv}", self.seed))
    }

    /// Whitespace-separated two-column table for gnuplot.
    pub fn dat(&mut self, name: &str, header: &str, rows: impl Iterator<Item = (f64, f64)>) -> std::io::Result<()> {
        let mut s = format!("# seed={}\n# {header}\n", self.seed);
        for (x, y) in rows {
            s.push_str(&format!("{x:.17e} {y:.17e}\n"));
        }
        self.add(name, s)
    }

    pub fn json(&mut self, name: &str, value: &Value) -> std::io::Result<()> {
        let mut v = value.clone();
        if let Some(o) = v.as_object_mut() {
            o.entry("seed").or_insert(json!(self.seed));
        }
        let text = serde_json::to_string_pretty(&v).map_err(std::io::Error::other)? + "\n";
        self.add(name, text)
    }

    /// Emits `name.json` (and `name.csv` when given) and prints the result.
    pub fn primary(&mut self, name: &str, body: Value, csv: Option<String>) -> std::io::Result<()> {
        self.json(&format!("{name}.json"), &body)?;
        match (self.format, &csv) {
            (Format::Csv, Some(c)) => emit_stdout(c),
            _ => emit_stdout(&(serde_json::to_string_pretty(&body).map_err(std::io::Error::other)? + "\n")),
        }
        if let Some(c) = csv {
            self.data(&format!("{name}.csv"), &c)?;
        }
        Ok(())
    }

    pub fn primary_stdout_only(&self, body: Value) {
        emit_stdout(&(serde_json::to_string_pretty(&body).expect("JSON values serialize") + "\n"));
    }

    /// Writes every file and `manifest.json`; a no-op without `--out`.
    pub fn finish(&self, config: Value, wall_seconds: f64) -> std::io::Result<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let mut digests = BTreeMap::new();
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
            digests.insert(name.clone(), sha256_hex(content.as_bytes()));
        }
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": config,
            "wall_seconds": wall_seconds,
            "checks": self.checks,
            "all_pass": self.checks.iter().all(|c| c.pass),
            "files": digests,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n")
    }
}
