//! Embedding providers and cosine similarity.
//!
//! The built-in [`HashEmbedder`] is a signed feature-hashing bag of words:
//! text is lowercased and split on every non-alphanumeric character, each
//! token is hashed with 64-bit FNV-1a, the hash picks bucket `h % dim` and
//! the sign comes from the top bit (`+1` when clear). Bucket counts are then
//! L2-normalized. Empty input yields the zero vector.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{MemError, Result};

pub const DEFAULT_DIM: usize = 256;
pub const MIN_DIM: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Componentwise mean; the zero vector of `dim` for an empty input.
    pub fn mean(vectors: &[EmbeddingVector], dim: usize) -> EmbeddingVector {
        let mut out = EmbeddingVector::zeros(dim);
        if vectors.is_empty() {
            return out;
        }
        for v in vectors {
            for (o, x) in out.values.iter_mut().zip(&v.values) {
                *o += x;
            }
        }
        let n = vectors.len() as f64;
        out.values.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(MemError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Source of embeddings. Implementations must be deterministic: the same
/// text always maps to the same vector.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> EmbeddingVector;
    fn dimension(&self) -> usize;
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<T> {
    fn embed(&self, text: &str) -> EmbeddingVector {
        (**self).embed(text)
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for &T {
    fn embed(&self, text: &str) -> EmbeddingVector {
        (**self).embed(text)
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(MemError::InvalidArgument(format!(
                "embedding dimension must be >= {MIN_DIM}, got {dim}"
            )));
        }
        Ok(HashEmbedder { dim })
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: DEFAULT_DIM }
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, text: &str) -> EmbeddingVector {
        hash_embed(text, self.dim)
    }

    fn dimension(&self) -> usize {
        self.dim
    }
}

/// Signed feature-hash embedding of `text` into `dim` buckets.
pub fn hash_embed(text: &str, dim: usize) -> EmbeddingVector {
    let mut v = EmbeddingVector::zeros(dim);
    for token in tokenize(text) {
        let h = fnv1a64(token.as_bytes());
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v.values[bucket] += sign;
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.values.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
