//! JSON report envelope and atomic output.
//!
//! Every JSON document has the top-level keys `config`, `results`,
//! `diagnostics` and `version`; see `docs/report-schema.md`.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

#[derive(Debug, Default, Serialize)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub config: C,
    pub results: R,
    pub diagnostics: Diagnostics,
    pub version: &'static str,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    pub fn new(config: C, results: R, diagnostics: Diagnostics) -> Self {
        Report {
            config,
            results,
            diagnostics,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut buf = serde_json::to_vec_pretty(self)?;
        buf.push(b'\n');
        Ok(buf)
    }
}

/// Writes `bytes` to `path` through a sibling temp file and a rename, or to
/// standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(bytes)?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
