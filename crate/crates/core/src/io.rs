//! CSV and JSON output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::GridField;

/// Writes `x,u` rows. Values use Rust's shortest round-trip formatting, so
/// identical fields give identical bytes.
pub fn write_field_csv<W: Write>(mut out: W, field: &GridField) -> Result<()> {
    writeln!(out, "x,u")?;
    for (i, v) in field.values.iter().enumerate() {
        writeln!(out, "{},{}", field.grid.x(i), v)?;
    }
    Ok(())
}

pub fn save_field_csv(path: &Path, field: &GridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field_csv(&mut w, field)?;
    w.flush()?;
    Ok(())
}

/// What a snapshot file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Asymptotic,
    Numerical,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub t: f64,
    /// Asymptotic order; absent for numerical and exact fields.
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub file: String,
    pub kind: SnapshotKind,
}

/// Writes a field next to the manifest and records it.
#[derive(Debug)]
pub struct SnapshotWriter<'a> {
    dir: &'a Path,
    entries: Vec<ManifestEntry>,
}

impl<'a> SnapshotWriter<'a> {
    pub fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            entries: Vec::new(),
        })
    }

    pub fn add(&mut self, field: &GridField, kind: SnapshotKind, k: Option<usize>) -> Result<()> {
        let stem = match (kind, k) {
            (SnapshotKind::Asymptotic, Some(k)) => format!("u_K{k}"),
            (SnapshotKind::Asymptotic, None) => "u_asym".to_string(),
            (SnapshotKind::Numerical, _) => "u_num".to_string(),
            (SnapshotKind::Exact, _) => "u_exact".to_string(),
        };
        let file = format!("{stem}_t{}.csv", field.t);
        save_field_csv(&self.dir.join(&file), field)?;
        self.entries.push(ManifestEntry {
            t: field.t,
            k,
            file,
            kind,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn finish(self) -> Result<Vec<ManifestEntry>> {
        write_json(&self.dir.join("manifest.json"), &self.entries)?;
        Ok(self.entries)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
