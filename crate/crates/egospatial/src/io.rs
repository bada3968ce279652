//! Line-delimited JSON files with a provenance header, written atomically.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use egospatial_core::dataset::CorpusStats;
use egospatial_core::scene::Scene;
use egospatial_core::TaskRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;

pub const HEADER_KEY: &str = "_header";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}")]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: expected a `{expected}` file, found `{found}`")]
    Kind {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

/// Constants of the original generative pipeline, carried as metadata only.
/// Nothing in this crate reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub resolution: u32,
    pub guidance_scale: f64,
    pub camera_scale: f64,
    pub inference_steps: u32,
    pub view_source: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            resolution: 576,
            guidance_scale: 4.0,
            camera_scale: 2.0,
            inference_steps: 50,
            view_source: "analytic pinhole oracle".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// What the rest of the file holds: `scenes`, `records` or `stats`.
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub provenance: Provenance,
}

impl Header {
    pub fn new(kind: &str, config: &RunConfig) -> Self {
        Header {
            kind: kind.into(),
            config_hash: config.hash(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            provenance: Provenance::default(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(rename = "_header")]
    header: Header,
}

/// One scene per line, keyed by its id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub id: String,
    pub scene: Scene,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `header` and `items` to a temp file next to `path`, then rename.
pub fn write_jsonl<T: Serialize>(path: &Path, header: &Header, items: &[T]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        let line = HeaderLine {
            header: header.clone(),
        };
        serde_json::to_writer(&mut w, &line).expect("header serializes");
        w.write_all(b"\n").map_err(io_err(path))?;
        for item in items {
            serde_json::to_writer(&mut w, item).expect("item serializes");
            w.write_all(b"\n").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Read a file written by [`write_jsonl`], or any headerless file of items.
/// Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Option<Header>, Vec<T>), IoError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut header = None;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |source| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        };
        if i == 0 && line.trim_start().starts_with(&format!("{{\"{HEADER_KEY}\"")) {
            let h: HeaderLine = serde_json::from_str(&line).map_err(parse_err)?;
            header = Some(h.header);
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(parse_err)?);
    }
    Ok((header, items))
}

fn expect_kind(path: &Path, header: &Option<Header>, kind: &str) -> Result<(), IoError> {
    match header {
        Some(h) if h.kind != kind => Err(IoError::Kind {
            path: path.to_path_buf(),
            expected: kind.into(),
            found: h.kind.clone(),
        }),
        _ => Ok(()),
    }
}

pub fn read_records(path: &Path) -> Result<(Option<Header>, Vec<TaskRecord>), IoError> {
    let (h, items) = read_jsonl(path)?;
    expect_kind(path, &h, "records")?;
    Ok((h, items))
}

pub fn read_scenes(path: &Path) -> Result<(Option<Header>, Vec<SceneEntry>), IoError> {
    let (h, items) = read_jsonl(path)?;
    expect_kind(path, &h, "scenes")?;
    Ok((h, items))
}

/// A stats file holds exactly one [`CorpusStats`] line after the header.
pub fn read_stats(path: &Path) -> Result<(Option<Header>, CorpusStats), IoError> {
    let (h, mut items) = read_jsonl::<CorpusStats>(path)?;
    expect_kind(path, &h, "stats")?;
    match (items.pop(), items.is_empty()) {
        (Some(s), true) => Ok((h, s)),
        _ => Err(IoError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "stats file must hold exactly one stats object",
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use egospatial_core::synth::{generate_scene, SceneConfig};

    #[test]
    fn scenes_round_trip_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenes.jsonl");
        let entries: Vec<SceneEntry> = (0..5)
            .map(|i| SceneEntry {
                id: format!("scene_{i}"),
                scene: generate_scene(i, &SceneConfig::default()).unwrap(),
            })
            .collect();
        let header = Header::new("scenes", &RunConfig::default());
        write_jsonl(&path, &header, &entries).unwrap();
        let (h, back) = read_scenes(&path).unwrap();
        assert_eq!(h, Some(header));
        assert_eq!(back, entries);
        assert!(read_records(&path).is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "\n{\"id\": 1}\n").unwrap();
        match read_records(&path) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
