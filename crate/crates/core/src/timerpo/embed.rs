//! Token embedding sequences and a deterministic toy embedder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tokens with one embedding row each and a probability weight per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddingSequence {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Set when no weights were supplied and uniform ones were filled in.
    #[serde(default)]
    pub uniform: bool,
}

impl TokenEmbeddingSequence {
    /// `weights = None` gives uniform marginals.
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::shape("embedding sequence needs at least one row"));
        }
        if tokens.len() != n {
            return Err(Error::shape(format!("{} tokens for {n} vectors", tokens.len())));
        }
        let d = vectors[0].len();
        if d == 0 || vectors.iter().any(|r| r.len() != d) {
            return Err(Error::shape("embedding rows must share a positive dimension"));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("embedding vectors must be finite"));
        }
        let uniform = weights.is_none();
        let weights = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        check_simplex(&weights, n, "token weights")?;
        Ok(Self {
            tokens,
            vectors,
            weights,
            uniform,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }
}

pub(crate) fn check_simplex(w: &[f64], n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::shape(format!("{what}: expected {n} entries, got {}", w.len())));
    }
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::input(format!("{what} must be finite and non-negative")));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("{what} must sum to 1, got {total}")));
    }
    Ok(())
}

/// Maps each distinct token to a fixed unit vector drawn from a generator
/// seeded by the SHA-256 of its bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyEmbedder {
    pub dim: usize,
}

impl ToyEmbedder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dimension must be positive"));
        }
        Ok(Self { dim })
    }

    pub fn embed_token(&self, token: &str) -> Vec<f64> {
        let digest = Sha256::digest(token.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Uniform-weight sequence for the given tokens.
    pub fn embed(&self, tokens: &[String]) -> Result<TokenEmbeddingSequence> {
        let vectors = tokens.iter().map(|t| self.embed_token(t)).collect();
        TokenEmbeddingSequence::new(tokens.to_vec(), vectors, None)
    }
}

/// Whitespace tokenization used with the toy embedder.
pub fn whitespace_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_vectors_are_unit_and_stable() {
        let e = ToyEmbedder::new(16).unwrap();
        let a = e.embed_token("period");
        let b = e.embed_token("period");
        assert_eq!(a, b);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_ne!(a, e.embed_token("trend"));
    }

    #[test]
    fn sequence_validation() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let t = vec!["a".to_string(), "b".to_string()];
        let s = TokenEmbeddingSequence::new(t.clone(), v.clone(), None).unwrap();
        assert!(s.uniform);
        assert_eq!(s.weights, vec![0.5, 0.5]);
        assert!(TokenEmbeddingSequence::new(t.clone(), v.clone(), Some(vec![0.6, 0.6])).is_err());
        assert!(TokenEmbeddingSequence::new(t.clone(), vec![vec![1.0], vec![1.0, 2.0]], None).is_err());
        assert!(TokenEmbeddingSequence::new(vec![], vec![], None).is_err());
        assert!(TokenEmbeddingSequence::new(t, v, Some(vec![1.0, 0.0])).is_ok());
    }
}
