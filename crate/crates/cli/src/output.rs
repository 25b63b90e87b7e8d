//! CSV and summary writers. Floats carry 17 significant digits so that a
//! file read back reproduces the computed values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a header line and one line per row.
pub fn render_csv<R: AsRef<[f64]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let row = row.as_ref();
        debug_assert_eq!(row.len(), header.len());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s.push('\n');
    }
    s
}

/// Output directory for one run.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_csv<R: AsRef<[f64]>>(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, render_csv(header, rows))?;
        Ok(path)
    }

    pub fn write_summary<T: Serialize>(&self, summary: &T) -> Result<PathBuf, CliError> {
        let path = self.root.join("summary.json");
        let mut text = serde_json::to_string_pretty(summary)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
