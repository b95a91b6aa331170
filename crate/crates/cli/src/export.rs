//! Deterministic data export. CSV for large tables, JSON for summaries and
//! manifests. Floats are serialized with 17 significant digits so identical
//! runs produce byte-identical data files regardless of thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Streams CSV rows to `dir/name`. Rows are written in the order given;
/// callers order them by index so parallel runs stay byte-identical.
pub struct CsvFile {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, header: &str) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{header}")?;
        Ok(Self { path, writer })
    }

    pub fn write_row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.writer, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
