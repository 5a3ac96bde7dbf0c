use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingProvider, EmbeddingVector, Pooling};
use crate::error::{Error, Result};

const INDEX_FILE: &str = "index.json";
const VECTORS_FILE: &str = "vectors.bin";

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    provider: String,
    /// Offset in f64 units into `vectors.bin`.
    offset: usize,
    dim: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    entries: BTreeMap<String, IndexEntry>,
}

/// Content-addressed embedding cache in front of an optional provider.
///
/// Vectors live in `vectors.bin` as little-endian f64 and are located
/// through the `index.json` sidecar, keyed by SHA-256 of the provider name
/// and the text. Without an inner provider the cache serves recorded
/// vectors only and misses are reported as an unavailable backend.
/// [`flush`](Self::flush) rewrites both files in key order, so the bytes
/// do not depend on lookup order.
pub struct CachedEmbedder {
    dir: PathBuf,
    inner: Option<Box<dyn EmbeddingProvider>>,
    name: String,
    dim: usize,
    pooling: Pooling,
    entries: Mutex<BTreeMap<String, (String, Vec<f64>)>>,
}

pub fn cache_key(provider: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(provider.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

impl CachedEmbedder {
    pub fn open(dir: impl Into<PathBuf>, inner: Box<dyn EmbeddingProvider>) -> Result<Self> {
        let (name, dim, pooling) = (inner.name().to_string(), inner.dim(), inner.pooling());
        Self::open_with(dir.into(), Some(inner), name, dim, pooling)
    }

    /// Replays a cache with no backend behind it.
    pub fn offline(dir: impl Into<PathBuf>, name: impl Into<String>, dim: usize, pooling: Pooling) -> Result<Self> {
        Self::open_with(dir.into(), None, name.into(), dim, pooling)
    }

    fn open_with(
        dir: PathBuf,
        inner: Option<Box<dyn EmbeddingProvider>>,
        name: String,
        dim: usize,
        pooling: Pooling,
    ) -> Result<Self> {
        let entries = load(&dir)?;
        Ok(CachedEmbedder {
            dir,
            inner,
            name,
            dim,
            pooling,
            entries: Mutex::new(entries),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flush(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let entries = self.entries.lock().expect("cache lock");
        let mut bin = Vec::new();
        let mut index = Index::default();
        let mut offset = 0;
        for (key, (provider, values)) in entries.iter() {
            for v in values {
                bin.extend_from_slice(&v.to_le_bytes());
            }
            index.entries.insert(
                key.clone(),
                IndexEntry {
                    provider: provider.clone(),
                    offset,
                    dim: values.len(),
                },
            );
            offset += values.len();
        }
        let bin_path = self.dir.join(VECTORS_FILE);
        fs::write(&bin_path, bin).map_err(|e| Error::io(&bin_path, e))?;
        let idx_path = self.dir.join(INDEX_FILE);
        let json = serde_json::to_string_pretty(&index).map_err(|e| Error::validation(e.to_string()))?;
        fs::write(&idx_path, json + "\n").map_err(|e| Error::io(&idx_path, e))
    }
}

fn load(dir: &Path) -> Result<BTreeMap<String, (String, Vec<f64>)>> {
    let idx_path = dir.join(INDEX_FILE);
    if !idx_path.exists() {
        return Ok(BTreeMap::new());
    }
    let raw = fs::read_to_string(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
    let index: Index =
        serde_json::from_str(&raw).map_err(|e| Error::validation(format!("{}: {e}", idx_path.display())))?;
    let bin_path = dir.join(VECTORS_FILE);
    let bin = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let mut out = BTreeMap::new();
    for (key, e) in index.entries {
        let start = e.offset * 8;
        let end = start + e.dim * 8;
        let bytes = bin
            .get(start..end)
            .ok_or_else(|| Error::validation(format!("{}: entry {key} out of range", bin_path.display())))?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        out.insert(key, (e.provider, values));
    }
    Ok(out)
}

impl EmbeddingProvider for CachedEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn pooling(&self) -> Pooling {
        self.pooling
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let key = cache_key(&self.name, text);
        if let Some((_, v)) = self.entries.lock().expect("cache lock").get(&key) {
            return EmbeddingVector::new(v.clone());
        }
        let inner = self
            .inner
            .as_ref()
            .ok_or_else(|| Error::transport(&self.name, "cache miss with no backend configured"))?;
        let v = inner.embed(text)?;
        self.entries
            .lock()
            .expect("cache lock")
            .insert(key, (self.name.clone(), v.values().to_vec()));
        Ok(v)
    }

    fn reentrant(&self) -> bool {
        self.inner.as_ref().is_none_or(|p| p.reentrant())
    }
}
