//! CSV curves plus one JSON manifest per output directory.
//!
//! Floats are written in shortest round-trip form, so every CSV value loads
//! back bit-identical.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {message}", path.display())]
    Layout { path: PathBuf, message: String },
}

impl PersistError {
    fn layout(path: &Path, message: impl Into<String>) -> Self {
        PersistError::Layout { path: path.to_path_buf(), message: message.into() }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PersistError> {
    let wrap = |source| PersistError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|source| PersistError::Io { path: path.to_path_buf(), source })
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PersistError> {
    let wrap = |source| PersistError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(wrap)
}

/// A data file described by the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub kind: String,
    pub rows: usize,
}

/// Resolution actually used at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointProvenance {
    pub inv_hbar: f64,
    pub n_max: usize,
    pub steps_per_period: usize,
    pub audited: bool,
    pub certified: bool,
    pub drift: Option<f64>,
    pub n_max_refined: Option<usize>,
    pub steps_refined: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub command: String,
    /// Effective configuration after file values and overrides are merged.
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub points: Vec<PointProvenance>,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            files: Vec::new(),
            points: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, PersistError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|source| PersistError::Io { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| PersistError::Json { path, source })
}

/// Output directory under construction; the manifest is written last and
/// lists every file added through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    /// Creates `root` if needed. A directory holding files from another
    /// run is rejected so the manifest stays complete.
    pub fn create(root: &Path, manifest: Manifest) -> Result<Self, PersistError> {
        fs::create_dir_all(root).map_err(|source| PersistError::Io { path: root.to_path_buf(), source })?;
        let occupied = fs::read_dir(root)
            .map_err(|source| PersistError::Io { path: root.to_path_buf(), source })?
            .next()
            .is_some();
        if occupied {
            return Err(PersistError::layout(root, "output directory is not empty"));
        }
        Ok(Self { root: root.to_path_buf(), manifest })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn manifest_mut(&mut self) -> &mut Manifest {
        &mut self.manifest
    }

    pub fn add_csv<T: Serialize>(&mut self, name: &str, kind: &str, rows: &[T]) -> Result<PathBuf, PersistError> {
        let path = self.root.join(name);
        write_csv(&path, rows)?;
        self.record(name, kind, rows.len());
        Ok(path)
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, kind: &str, value: &T) -> Result<PathBuf, PersistError> {
        let path = self.root.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|source| PersistError::Json { path: path.clone(), source })?;
        fs::write(&path, text).map_err(|source| PersistError::Io { path: path.clone(), source })?;
        self.record(name, kind, 1);
        Ok(path)
    }

    fn record(&mut self, name: &str, kind: &str, rows: usize) {
        self.manifest.files.push(FileEntry { name: name.to_string(), kind: kind.to_string(), rows });
    }

    pub fn finish(self) -> Result<Manifest, PersistError> {
        let path = self.root.join(MANIFEST_NAME);
        let text =
            serde_json::to_string_pretty(&self.manifest).map_err(|source| PersistError::Json { path: path.clone(), source })?;
        fs::write(&path, text).map_err(|source| PersistError::Io { path, source })?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Row {
        x: f64,
        flag: bool,
        note: String,
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<Row> = [0.1, 1.0 / 3.0, 8.956e-7, f64::MIN_POSITIVE, -2.5e300, f64::NAN, f64::INFINITY]
            .iter()
            .map(|&x| Row { x, flag: x > 0.0, note: "a,b \"c\"".into() })
            .collect();
        let path = dir.path().join("rows.csv");
        write_csv(&path, &rows).unwrap();
        let back: Vec<Row> = read_csv(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!((a.flag, &a.note), (b.flag, &b.note));
        }
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("out");
        let mut out = OutputDir::create(&root, Manifest::new("test", serde_json::json!({"gamma": 0.72}))).unwrap();
        out.add_csv("a.csv", "rows", &[Row { x: 1.0, flag: true, note: String::new() }]).unwrap();
        out.add_json("b.json", "blob", &serde_json::json!({"k": 1})).unwrap();
        out.finish().unwrap();
        let m = read_manifest(&root).unwrap();
        let mut on_disk: Vec<String> =
            fs::read_dir(&root).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        on_disk.sort();
        assert_eq!(on_disk, ["a.csv", "b.json", MANIFEST_NAME]);
        assert_eq!(m.files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), ["a.csv", "b.json"]);
        assert_eq!(m.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn refuses_occupied_directory_and_reports_paths() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("stale.csv"), "x\n").unwrap();
        let err = OutputDir::create(dir.path(), Manifest::new("t", serde_json::Value::Null)).unwrap_err();
        assert!(err.to_string().contains(&dir.path().display().to_string()));
        let missing = dir.path().join("nope.csv");
        let err = read_csv::<Row>(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.csv"));
    }
}
