//! On-disk transcript files: `{config_slug}/{item_id}_{prompt_index}.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Transcript;
use crate::report::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("io_error: {0}")]
    Io(String),
    #[error("parse_error: {0}")]
    Parse(String),
    #[error("unsupported_schema: version {found}, this build reads up to {SCHEMA_VERSION}")]
    UnsupportedSchema { found: u32 },
    #[error("invalid_transcript: {0}")]
    Invalid(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io(_) => "io_error",
            StoreError::Parse(_) => "parse_error",
            StoreError::UnsupportedSchema { .. } => "unsupported_schema",
            StoreError::Invalid(_) => "invalid_transcript",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub transcript: Transcript,
}

/// Keeps ASCII alphanumerics, `-` and `.`; every other byte, `_` included,
/// becomes `_xx`. The mapping is injective, and the last `_` of a file stem
/// always separates the item from the prompt index.
pub fn escape_component(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for b in raw.bytes() {
        if b.is_ascii_alphanumeric() || b == b'-' || b == b'.' {
            out.push(b as char);
        } else {
            out.push_str(&format!("_{b:02x}"));
        }
    }
    out
}

pub fn transcript_path(dir: &Path, t: &Transcript) -> PathBuf {
    dir.join(t.slug())
        .join(format!("{}_{}.json", escape_component(&t.item_id), t.prompt_index))
}

pub fn to_json(t: &Transcript) -> Result<Vec<u8>, StoreError> {
    let file = TranscriptFile {
        schema_version: SCHEMA_VERSION,
        transcript: t.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).map_err(|e| StoreError::Parse(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn from_json(bytes: &[u8]) -> Result<Transcript, StoreError> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let version: Version = serde_json::from_slice(bytes).map_err(|e| StoreError::Parse(e.to_string()))?;
    if version.schema_version > SCHEMA_VERSION || version.schema_version == 0 {
        return Err(StoreError::UnsupportedSchema {
            found: version.schema_version,
        });
    }
    let file: TranscriptFile = serde_json::from_slice(bytes).map_err(|e| StoreError::Parse(e.to_string()))?;
    let t = file.transcript;
    if !t.incomplete {
        t.check_invariants().map_err(|e| StoreError::Invalid(e.to_string()))?;
    }
    Ok(t)
}

pub fn save_transcript(t: &Transcript, dir: &Path) -> Result<PathBuf, StoreError> {
    let path = transcript_path(dir, t);
    let parent = path.parent().expect("transcript path has a parent");
    fs::create_dir_all(parent).map_err(|e| StoreError::Io(format!("{}: {e}", parent.display())))?;
    write_atomic(&path, &to_json(t)?).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Which transcripts [`load_transcripts`] returns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranscriptFilter {
    pub group_size: Option<usize>,
    pub rounds: Option<u32>,
    pub prompt_index: Option<usize>,
    pub include_incomplete: bool,
}

impl TranscriptFilter {
    pub fn accepts(&self, t: &Transcript) -> bool {
        (self.include_incomplete || !t.incomplete)
            && self.group_size.is_none_or(|k| t.group_size() == k)
            && self.rounds.is_none_or(|r| t.rounds == r)
            && self.prompt_index.is_none_or(|p| t.prompt_index == p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileError {
    pub path: PathBuf,
    pub error: StoreError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedTranscripts {
    /// Sorted by file path.
    pub transcripts: Vec<Transcript>,
    pub errors: Vec<FileError>,
}

fn json_files(dir: &Path, out: &mut Vec<PathBuf>, errors: &mut Vec<FileError>) {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            errors.push(FileError {
                path: dir.to_owned(),
                error: StoreError::Io(e.to_string()),
            });
            return;
        }
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            json_files(&path, out, errors);
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
}

/// Reads every `*.json` under `dir`. Unreadable or invalid files become
/// per-file errors; they never fail the whole load.
pub fn load_transcripts(dir: &Path, filter: &TranscriptFilter) -> LoadedTranscripts {
    let mut paths = Vec::new();
    let mut loaded = LoadedTranscripts::default();
    json_files(dir, &mut paths, &mut loaded.errors);
    paths.sort();
    for path in paths {
        let parsed = fs::read(&path)
            .map_err(|e| StoreError::Io(e.to_string()))
            .and_then(|bytes| from_json(&bytes));
        match parsed {
            Ok(t) if filter.accepts(&t) => loaded.transcripts.push(t),
            Ok(_) => {}
            Err(error) => loaded.errors.push(FileError { path, error }),
        }
    }
    loaded
}
