//! Text embeddings for graph node features.
//!
//! A provider maps strings to fixed-width float vectors. The default is a
//! fully offline character-trigram hashing projection, so test runs and
//! index builds need no network or model download; a remote provider speaks
//! a small JSON batch protocol for SentenceBert-style embedding services.
//! Node features concatenate a 5-way one-hot of the node class with the text
//! embedding; masked nodes get the embedding of the literal `<MASK>` token.

use crate::graph::{SqlGraph, NODE_CLASS_COUNT};
use ndarray::Array2;
use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;
use std::sync::RwLock;
use thiserror::Error;

pub const MASK_TOKEN: &str = "<MASK>";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding cache format: {0}")]
    Format(String),
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier recorded in caches and checkpoints.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

// ---------------------------------------------------------------------------
// offline hashing provider
// ---------------------------------------------------------------------------

/// Character-trigram counts hashed into `dim` buckets (FNV-1a, fixed seed),
/// L2-normalized. Deterministic and collision-audited in tests.
pub struct HashingProvider {
    dim: usize,
}

impl HashingProvider {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        HashingProvider { dim }
    }

    fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dim];
        let chars: Vec<char> = std::iter::once('\u{2}')
            .chain(text.to_lowercase().chars())
            .chain(std::iter::once('\u{3}'))
            .collect();
        if chars.len() < 3 {
            return v;
        }
        for window in chars.windows(3) {
            let mut hash: u64 = 0xcbf29ce484222325;
            for c in window {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).as_bytes() {
                    hash ^= u64::from(*b);
                    hash = hash.wrapping_mul(0x100000001b3);
                }
            }
            let bucket = (hash % self.dim as u64) as usize;
            // sign bit decorrelates buckets under collisions
            let sign = if (hash >> 63) == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

impl Default for HashingProvider {
    fn default() -> Self {
        HashingProvider::new(128)
    }
}

impl EmbeddingProvider for HashingProvider {
    fn id(&self) -> String {
        format!("trigram-hash-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

// ---------------------------------------------------------------------------
// remote provider
// ---------------------------------------------------------------------------

/// HTTP embedding service: POST `{"texts": [...]}`, reply
/// `{"embeddings": [[...], ...]}`. The API key, when configured, is sent as
/// a bearer token.
pub struct RemoteProvider {
    pub endpoint: String,
    pub model: String,
    pub dim: usize,
    pub api_key_env: Option<String>,
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> String {
        format!("remote-{}-{}", self.model, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let client = reqwest::blocking::Client::new();
        let mut request = client.post(&self.endpoint).json(&serde_json::json!({
            "model": self.model,
            "texts": texts,
        }));
        if let Some(env_name) = &self.api_key_env {
            let key = std::env::var(env_name).map_err(|_| {
                EmbedError::ProviderUnavailable(format!("environment variable {env_name} not set"))
            })?;
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(EmbedError::ProviderUnavailable(format!(
                "embedding endpoint returned {}",
                response.status()
            )));
        }
        #[derive(serde::Deserialize)]
        struct Reply {
            embeddings: Vec<Vec<f32>>,
        }
        let reply: Reply = response
            .json()
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        if reply.embeddings.len() != texts.len() {
            return Err(EmbedError::ProviderUnavailable(format!(
                "embedding count mismatch: asked {}, got {}",
                texts.len(),
                reply.embeddings.len()
            )));
        }
        Ok(reply.embeddings)
    }
}

// ---------------------------------------------------------------------------
// caching front end
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"T2SQEMB\x01";

/// Provider plus a concurrent read / single-writer in-memory cache,
/// persistable as a versioned key-value file.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: RwLock<HashMap<String, Vec<f32>>>,
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>) -> Self {
        Embedder {
            provider,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn offline(dim: usize) -> Self {
        Embedder::new(Box::new(HashingProvider::new(dim)))
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    pub fn dim(&self) -> usize {
        self.provider.dim()
    }

    pub fn embed_text(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(text) {
            return Ok(hit.clone());
        }
        let computed = self.provider.embed_batch(&[text])?.remove(0);
        self.cache
            .write()
            .expect("cache lock")
            .insert(text.to_string(), computed.clone());
        Ok(computed)
    }

    /// Embed many strings, batching only the cache misses.
    pub fn embed_all(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let missing: Vec<&str> = {
            let cache = self.cache.read().expect("cache lock");
            let unique: BTreeSet<&str> = texts
                .iter()
                .copied()
                .filter(|t| !cache.contains_key(*t))
                .collect();
            unique.into_iter().collect()
        };
        if !missing.is_empty() {
            let vectors = self.provider.embed_batch(&missing)?;
            let mut cache = self.cache.write().expect("cache lock");
            for (text, vector) in missing.iter().zip(vectors) {
                cache.insert(text.to_string(), vector);
            }
        }
        let cache = self.cache.read().expect("cache lock");
        Ok(texts
            .iter()
            .map(|t| cache.get(*t).expect("just inserted").clone())
            .collect())
    }

    pub fn save_cache(&self, path: &Path) -> Result<(), EmbedError> {
        let cache = self.cache.read().expect("cache lock");
        let mut entries: Vec<(&String, &Vec<f32>)> = cache.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = Vec::new();
        out.extend_from_slice(CACHE_MAGIC);
        let id = self.provider.id();
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&(self.provider.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for (key, vector) in entries {
            out.extend_from_slice(&(key.len() as u32).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            for x in vector {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load_cache(&self, path: &Path) -> Result<usize, EmbedError> {
        let mut file = std::fs::File::open(path)?;
        let mut data = Vec::new();
        file.read_to_end(&mut data)?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, n: usize| -> Result<&[u8], EmbedError> {
            if *cursor + n > data.len() {
                return Err(EmbedError::Format("truncated cache file".to_string()));
            }
            let slice = &data[*cursor..*cursor + n];
            *cursor += n;
            Ok(slice)
        };
        if take(&mut cursor, 8)? != CACHE_MAGIC {
            return Err(EmbedError::Format("bad magic".to_string()));
        }
        let id_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let id = String::from_utf8(take(&mut cursor, id_len)?.to_vec())
            .map_err(|_| EmbedError::Format("bad provider id".to_string()))?;
        if id != self.provider.id() {
            return Err(EmbedError::Format(format!(
                "cache built for provider `{id}`, active provider is `{}`",
                self.provider.id()
            )));
        }
        let dim = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        if dim != self.provider.dim() {
            return Err(EmbedError::Format(format!(
                "cache dimension {dim} does not match provider dimension {}",
                self.provider.dim()
            )));
        }
        let count = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
        let mut cache = self.cache.write().expect("cache lock");
        for _ in 0..count {
            let key_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
            let key = String::from_utf8(take(&mut cursor, key_len)?.to_vec())
                .map_err(|_| EmbedError::Format("bad key".to_string()))?;
            let mut vector = Vec::with_capacity(dim);
            for _ in 0..dim {
                vector.push(f32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()));
            }
            cache.insert(key, vector);
        }
        Ok(count as usize)
    }
}

impl std::fmt::Debug for Embedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedder")
            .field("provider", &self.provider.id())
            .field(
                "cached",
                &self.cache.read().map(|c| c.len()).unwrap_or(0),
            )
            .finish()
    }
}

// ---------------------------------------------------------------------------
// node features
// ---------------------------------------------------------------------------

/// Assemble the initial node feature matrix: row v = one-hot(class) ⊕
/// text embedding, with the `<MASK>` sentinel substituted for masked nodes.
pub fn assemble_features(
    graph: &SqlGraph,
    masked: &BTreeSet<usize>,
    embedder: &Embedder,
) -> Result<Array2<f64>, EmbedError> {
    let d_text = embedder.dim();
    let texts: Vec<&str> = graph
        .nodes
        .iter()
        .map(|n| {
            if masked.contains(&n.id) {
                MASK_TOKEN
            } else {
                n.text.as_str()
            }
        })
        .collect();
    let vectors = embedder.embed_all(&texts)?;
    let mut features = Array2::<f64>::zeros((graph.nodes.len(), NODE_CLASS_COUNT + d_text));
    for (row, node) in graph.nodes.iter().enumerate() {
        features[[row, node.class.index()]] = 1.0;
        for (j, x) in vectors[row].iter().enumerate() {
            features[[row, NODE_CLASS_COUNT + j]] = f64::from(*x);
        }
    }
    Ok(features)
}

/// Feature width for a given text dimension.
pub fn feature_width(d_text: usize) -> usize {
    NODE_CLASS_COUNT + d_text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_sql;
    use crate::graph::build_graph;

    #[test]
    fn hashing_provider_is_deterministic_and_sized() {
        let p = HashingProvider::new(64);
        let a = p.embed_batch(&["student"]).unwrap();
        let b = p.embed_batch(&["student"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].len(), 64);
    }

    #[test]
    fn common_identifiers_do_not_collide() {
        let p = HashingProvider::new(128);
        let words = [
            "student", "singer", "concert", "pets", "has_pet", "SELECT", "JOIN", "WHERE", "EQ",
            "COUNT", "name", "age", "cat", "bird", "<MASK>", "stuid", "petid",
        ];
        let vectors = p.embed_batch(&words).unwrap();
        for i in 0..words.len() {
            for j in (i + 1)..words.len() {
                assert_ne!(
                    vectors[i], vectors[j],
                    "collision between {} and {}",
                    words[i], words[j]
                );
            }
        }
    }

    #[test]
    fn vectors_are_unit_norm() {
        let p = HashingProvider::new(128);
        let v = &p.embed_batch(&["concert_singer"]).unwrap()[0];
        let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-5);
    }

    #[test]
    fn features_have_single_hot_class_block() {
        let embedder = Embedder::offline(32);
        let g = build_graph(&parse_sql("SELECT count(*) FROM singer WHERE age > 20").unwrap()).unwrap();
        let features = assemble_features(&g, &BTreeSet::new(), &embedder).unwrap();
        assert_eq!(features.ncols(), 5 + 32);
        for row in 0..features.nrows() {
            let hot: f64 = (0..5).map(|c| features[[row, c]]).sum();
            assert_eq!(hot, 1.0);
        }
        // table node is class index 2
        let table_row = g.nodes.iter().position(|n| n.text == "singer").unwrap();
        assert_eq!(features[[table_row, 2]], 1.0);
    }

    #[test]
    fn masked_rows_use_the_sentinel() {
        let embedder = Embedder::offline(32);
        let g = build_graph(&parse_sql("SELECT count(*) FROM singer").unwrap()).unwrap();
        let masked: BTreeSet<usize> = [3usize].into_iter().collect();
        let features = assemble_features(&g, &masked, &embedder).unwrap();
        let sentinel = embedder.embed_text(MASK_TOKEN).unwrap();
        for (j, x) in sentinel.iter().enumerate() {
            assert_eq!(features[[3, 5 + j]], f64::from(*x));
        }
    }

    #[test]
    fn cache_round_trips_through_file() {
        let embedder = Embedder::offline(16);
        let before = embedder.embed_text("student").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        embedder.save_cache(&path).unwrap();

        let fresh = Embedder::offline(16);
        assert_eq!(fresh.load_cache(&path).unwrap(), 1);
        assert_eq!(fresh.embed_text("student").unwrap(), before);

        let wrong_dim = Embedder::offline(32);
        assert!(wrong_dim.load_cache(&path).is_err());
    }
}
