//! Code embedding lookup and an on-disk embedding cache.

use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{BackendError, Embedder};
use crate::engine::Transcript;
use crate::primitives::EmbeddingVector;

/// Vector for every distinct code text in a transcript set.
#[derive(Debug, Clone, Default)]
pub struct CodeEmbeddings {
    vectors: HashMap<String, EmbeddingVector>,
}

impl CodeEmbeddings {
    /// Embeds every distinct non-empty code in one provider call.
    pub fn build<'a>(
        transcripts: impl IntoIterator<Item = &'a Transcript>,
        embedder: &dyn Embedder,
    ) -> Result<Self, BackendError> {
        let texts: BTreeSet<String> = transcripts
            .into_iter()
            .flat_map(|t| t.utterances.iter().map(|u| u.code().text))
            .filter(|c| !c.is_empty())
            .collect();
        Self::for_texts(texts.into_iter().collect(), embedder)
    }

    pub fn for_texts(texts: Vec<String>, embedder: &dyn Embedder) -> Result<Self, BackendError> {
        if texts.is_empty() {
            return Ok(Self::default());
        }
        let vectors = embedder.embed(&texts)?;
        Ok(Self {
            vectors: texts.into_iter().zip(vectors).collect(),
        })
    }

    pub fn get(&self, text: &str) -> Option<&EmbeddingVector> {
        self.vectors.get(text)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn text_sha256(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheFormat {
    #[default]
    Jsonl,
    /// Records of `u32 len | provider_id | 32-byte sha256 | u32 dim | dim × f64`,
    /// integers and floats little-endian.
    Binary,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    provider_id: String,
    text_sha256: String,
    dim: usize,
    values: Vec<f64>,
}

type CacheKey = (String, [u8; 32]);

struct CacheState {
    entries: HashMap<CacheKey, Vec<f64>>,
    file: Option<File>,
}

/// Memoizes an embedder keyed by `(provider_id, sha256(text))`, optionally
/// persisting new vectors to an append-only file.
pub struct CachedEmbedder<E> {
    inner: E,
    format: CacheFormat,
    path: Option<PathBuf>,
    state: Mutex<CacheState>,
}

fn cache_io(path: &Path, e: impl std::fmt::Display) -> BackendError {
    BackendError::Precondition(format!("embedding cache {}: {e}", path.display()))
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn in_memory(inner: E) -> Self {
        Self {
            inner,
            format: CacheFormat::default(),
            path: None,
            state: Mutex::new(CacheState {
                entries: HashMap::new(),
                file: None,
            }),
        }
    }

    /// Loads existing records from `path` (if present) and appends new ones.
    pub fn open(inner: E, path: impl Into<PathBuf>, format: CacheFormat) -> Result<Self, BackendError> {
        let path = path.into();
        let entries = if path.exists() {
            match format {
                CacheFormat::Jsonl => read_jsonl(&path)?,
                CacheFormat::Binary => read_binary(&path)?,
            }
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| cache_io(&path, e))?;
        Ok(Self {
            inner,
            format,
            path: Some(path),
            state: Mutex::new(CacheState {
                entries,
                file: Some(file),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn append(&self, file: &mut File, provider_id: &str, sha: &[u8; 32], values: &[f64]) -> Result<(), BackendError> {
        let path = self.path.as_deref().unwrap_or(Path::new("<memory>"));
        let bytes = match self.format {
            CacheFormat::Jsonl => {
                let record = JsonRecord {
                    provider_id: provider_id.to_owned(),
                    text_sha256: hex::encode(sha),
                    dim: values.len(),
                    values: values.to_vec(),
                };
                let mut line = serde_json::to_vec(&record).map_err(|e| cache_io(path, e))?;
                line.push(b'\n');
                line
            }
            CacheFormat::Binary => {
                let mut out = Vec::with_capacity(44 + provider_id.len() + 8 * values.len());
                out.extend((provider_id.len() as u32).to_le_bytes());
                out.extend(provider_id.as_bytes());
                out.extend(sha);
                out.extend((values.len() as u32).to_le_bytes());
                for v in values {
                    out.extend(v.to_le_bytes());
                }
                out
            }
        };
        file.write_all(&bytes).map_err(|e| cache_io(path, e))
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        crate::backends::check_embed_input(texts)?;
        let provider = self.inner.provider_id().to_owned();
        let keys: Vec<[u8; 32]> = texts.iter().map(|t| text_sha256(t)).collect();
        let mut state = self.state.lock().expect("cache lock poisoned");

        let mut missing: Vec<String> = Vec::new();
        let mut missing_keys: Vec<[u8; 32]> = Vec::new();
        for (text, key) in texts.iter().zip(&keys) {
            let cache_key = (provider.clone(), *key);
            if !state.entries.contains_key(&cache_key) && !missing_keys.contains(key) {
                missing.push(text.clone());
                missing_keys.push(*key);
            }
        }
        if !missing.is_empty() {
            let fresh = self.inner.embed(&missing)?;
            for (key, vector) in missing_keys.iter().zip(fresh) {
                let values = vector.into_values();
                if let Some(file) = state.file.as_mut() {
                    self.append(file, &provider, key, &values)?;
                }
                state.entries.insert((provider.clone(), *key), values);
            }
            if let Some(file) = state.file.as_mut() {
                file.flush().map_err(|e| BackendError::Precondition(e.to_string()))?;
            }
        }
        keys.iter()
            .map(|key| {
                let values = state.entries[&(provider.clone(), *key)].clone();
                EmbeddingVector::new(values, provider.clone()).map_err(|e| BackendError::InvalidResponse(e.to_string()))
            })
            .collect()
    }
}

fn read_jsonl(path: &Path) -> Result<HashMap<CacheKey, Vec<f64>>, BackendError> {
    let file = File::open(path).map_err(|e| cache_io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| cache_io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonRecord =
            serde_json::from_str(&line).map_err(|e| cache_io(path, format!("line {}: {e}", i + 1)))?;
        let mut sha = [0u8; 32];
        hex::decode_to_slice(&record.text_sha256, &mut sha).map_err(|e| cache_io(path, format!("line {}: {e}", i + 1)))?;
        if record.values.len() != record.dim {
            return Err(cache_io(path, format!("line {}: dim does not match values", i + 1)));
        }
        out.insert((record.provider_id, sha), record.values);
    }
    Ok(out)
}

fn read_binary(path: &Path) -> Result<HashMap<CacheKey, Vec<f64>>, BackendError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| cache_io(path, e))?;
    let mut out = HashMap::new();
    let mut rest = bytes.as_slice();
    let truncated = || cache_io(path, "truncated record");
    let take = |rest: &mut &[u8], n: usize| -> Option<Vec<u8>> {
        if rest.len() < n {
            return None;
        }
        let (head, tail) = rest.split_at(n);
        *rest = tail;
        Some(head.to_vec())
    };
    while !rest.is_empty() {
        let len = u32::from_le_bytes(take(&mut rest, 4).ok_or_else(truncated)?.try_into().unwrap()) as usize;
        let provider = String::from_utf8(take(&mut rest, len).ok_or_else(truncated)?)
            .map_err(|e| cache_io(path, e))?;
        let sha: [u8; 32] = take(&mut rest, 32).ok_or_else(truncated)?.try_into().unwrap();
        let dim = u32::from_le_bytes(take(&mut rest, 4).ok_or_else(truncated)?.try_into().unwrap()) as usize;
        let raw = take(&mut rest, dim * 8).ok_or_else(truncated)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.insert((provider, sha), values);
    }
    Ok(out)
}
