//! Feed composition summaries: embeddings, topic clustering, the five
//! per-feed composition vectors, and pre/post deltas.

pub mod cluster;
pub mod embed;
pub mod vectors;

pub use cluster::{fit_topic_clusters, ClusterModel};
pub use embed::{cosine_similarity, EmbeddingProvider, ExternalServiceProvider, TopicAnchorProvider};
pub use vectors::{
    composition_delta, compute_source_vectors, compute_topic_vectors, CompositionVectors,
    DeltaGroup, SourceSplit, SourceVectors, TopicVectors, VectorPair,
};
