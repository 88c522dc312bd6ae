//! Post embedding providers.
//!
//! The production pipeline treats embeddings as an external capability
//! behind a trait, so a real text-embedding service can be slotted in.
//! The default provider is fully deterministic and offline: each topic
//! owns a unit basis vector and a post's embedding is that anchor plus
//! Gaussian noise seeded from the post text.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng;

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> &str;
    /// Must be deterministic per (provider, text).
    fn embed(&self, true_topic: &str, text: &str) -> Result<Vec<f64>>;
}

/// Deterministic topic-anchor embeddings.
///
/// Noise is sized so the noise vector's expected norm is `noise_norm`
/// (per-coordinate sigma = noise_norm / sqrt(dim)); same-topic posts then
/// stay near cosine 1 while different topics sit near orthogonal.
#[derive(Debug, Clone)]
pub struct TopicAnchorProvider {
    topic_index: BTreeMap<String, usize>,
    dim: usize,
    noise_norm: f64,
}

impl TopicAnchorProvider {
    pub fn new(topics: &[String], dim: usize) -> Self {
        let mut sorted = topics.to_vec();
        sorted.sort();
        sorted.dedup();
        let topic_index = sorted.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        TopicAnchorProvider { topic_index, dim, noise_norm: 0.1 }
    }
}

impl EmbeddingProvider for TopicAnchorProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "topic-anchor"
    }

    fn embed(&self, true_topic: &str, text: &str) -> Result<Vec<f64>> {
        let Some(&anchor) = self.topic_index.get(true_topic) else {
            return Err(Error::Embedding {
                provider: self.name().to_string(),
                message: format!("topic {true_topic:?} has no anchor"),
            });
        };
        if anchor >= self.dim {
            return Err(Error::Embedding {
                provider: self.name().to_string(),
                message: format!("dimension {} too small for {} topics", self.dim, self.topic_index.len()),
            });
        }
        let key = rng::hash_str(text);
        let sigma = self.noise_norm / (self.dim as f64).sqrt();
        let mut v: Vec<f64> = (0..self.dim)
            .map(|c| sigma * rng::hash_normal(&[0x70b1_c4ac, key, c as u64]))
            .collect();
        v[anchor] += 1.0;
        Ok(v)
    }
}

/// Placeholder for a configured external embedding service. Kept out of
/// the test surface; calling it without an endpoint is a labeled error so
/// the pipeline can fall back to the default provider when allowed.
#[derive(Debug, Clone)]
pub struct ExternalServiceProvider {
    pub endpoint: Option<String>,
    pub dim: usize,
}

impl EmbeddingProvider for ExternalServiceProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "external"
    }

    fn embed(&self, _true_topic: &str, _text: &str) -> Result<Vec<f64>> {
        Err(Error::Embedding {
            provider: self.name().to_string(),
            message: match &self.endpoint {
                Some(url) => format!("no network client configured for {url}"),
                None => "no endpoint configured".to_string(),
            },
        })
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
