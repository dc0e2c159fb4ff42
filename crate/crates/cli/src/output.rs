//! Output files: CSV with round-trip decimal floats, pretty JSON, written
//! through a temporary file in the target directory and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// A small CSV table. Floats use Rust's `Display`, which prints the shortest
/// decimal that reads back to the same `f64` and never uses a locale.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
    rows: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut table = Self::default();
        table.push_line(header.iter().map(|h| h.as_ref().to_string()));
        table.rows = 0;
        table
    }

    pub fn row<I>(&mut self, cells: I)
    where
        I: IntoIterator,
        I::Item: Cell,
    {
        self.push_line(cells.into_iter().map(|c| c.render()));
    }

    fn push_line(&mut self, cells: impl Iterator<Item = String>) {
        let line: Vec<String> = cells.collect();
        let _ = writeln!(self.text, "{}", line.join(","));
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub trait Cell {
    fn render(&self) -> String;
}

impl Cell for f64 {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Cell for String {
    fn render(&self) -> String {
        self.clone()
    }
}

impl Cell for &f64 {
    fn render(&self) -> String {
        self.to_string()
    }
}

/// Writes `bytes` to `path` atomically, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = path else {
        std::io::stdout().write_all(bytes)?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
