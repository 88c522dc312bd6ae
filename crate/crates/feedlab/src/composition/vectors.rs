//! Homepage composition summaries.
//!
//! A nonempty feed of length n maps to five summaries:
//!  - topic prevalence: per-label fraction, sum(count / n) = 1
//!  - topic prominence: per-label rank-weighted mass, sum over posts of
//!    1 / (rank * n); total mass is H(n) / n
//!  - average embedding: centroid of the post embeddings
//!  - source prevalence / prominence: the same two aggregations over the
//!    in-network vs out-of-network split
//!
//! Pre/post deltas compare the treatment topic's component (the "Cooking"
//! component for control accounts), the in-network component for source
//! vectors, and Euclidean distance for embeddings.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::sim::{FeedPage, PostRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSplit {
    pub in_network: f64,
    pub out_of_network: f64,
}

#[derive(Debug, Clone)]
pub struct TopicVectors {
    pub prevalence: BTreeMap<String, f64>,
    pub prominence: BTreeMap<String, f64>,
    pub avg_embedding: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SourceVectors {
    pub prevalence: SourceSplit,
    pub prominence: SourceSplit,
}

/// All five summaries for one feed.
#[derive(Debug, Clone)]
pub struct CompositionVectors {
    pub topic_prevalence: BTreeMap<String, f64>,
    pub topic_prominence: BTreeMap<String, f64>,
    pub avg_embedding: Vec<f64>,
    pub source_prevalence: SourceSplit,
    pub source_prominence: SourceSplit,
}

impl CompositionVectors {
    pub fn combine(topic: TopicVectors, source: SourceVectors) -> CompositionVectors {
        CompositionVectors {
            topic_prevalence: topic.prevalence,
            topic_prominence: topic.prominence,
            avg_embedding: topic.avg_embedding,
            source_prevalence: source.prevalence,
            source_prominence: source.prominence,
        }
    }
}

/// Topic prevalence, prominence, and centroid embedding for one feed.
///
/// Every label in `label_universe` gets an entry (zero when absent from
/// the feed), so downstream deltas can distinguish a zero component from
/// an unknown label. The labeler must cover every post.
pub fn compute_topic_vectors(
    feed: &FeedPage,
    label_universe: &[String],
    label_of: impl Fn(&PostRecord) -> Result<String>,
) -> Result<TopicVectors> {
    if feed.is_empty() {
        return Err(Error::Analysis("cannot summarize an empty feed".into()));
    }
    let n = feed.len() as f64;
    let mut prevalence: BTreeMap<String, f64> =
        label_universe.iter().map(|l| (l.clone(), 0.0)).collect();
    let mut prominence = prevalence.clone();
    let dim = feed.entries[0].post.embedding.len();
    let mut centroid = vec![0.0; dim];

    for entry in &feed.entries {
        let label = label_of(&entry.post)?;
        let (Some(prev), Some(prom)) = (prevalence.get_mut(&label), prominence.get_mut(&label))
        else {
            return Err(Error::Analysis(format!(
                "label {label:?} for post {} is outside the label universe",
                entry.post.post_id
            )));
        };
        *prev += 1.0 / n;
        *prom += 1.0 / (entry.rank as f64 * n);
        if entry.post.embedding.len() != dim {
            return Err(Error::Analysis(format!(
                "embedding dimension mismatch in post {}",
                entry.post.post_id
            )));
        }
        for (c, e) in centroid.iter_mut().zip(&entry.post.embedding) {
            *c += e / n;
        }
    }

    Ok(TopicVectors { prevalence, prominence, avg_embedding: centroid })
}

/// Source-type prevalence and prominence for one feed.
///
/// A post is in-network iff its source was the subject of some prior
/// interaction in the account's history (`in_network_sources`). Control
/// accounts' histories only ever contain primer targets, which yields the
/// intended primer-only in-network set without special casing.
pub fn compute_source_vectors(
    feed: &FeedPage,
    in_network_sources: &BTreeSet<String>,
) -> Result<SourceVectors> {
    if feed.is_empty() {
        return Err(Error::Analysis("cannot summarize an empty feed".into()));
    }
    let n = feed.len() as f64;
    let mut prevalence = SourceSplit { in_network: 0.0, out_of_network: 0.0 };
    let mut prominence = SourceSplit { in_network: 0.0, out_of_network: 0.0 };
    for entry in &feed.entries {
        let weight_prev = 1.0 / n;
        let weight_prom = 1.0 / (entry.rank as f64 * n);
        if in_network_sources.contains(&entry.post.source_id) {
            prevalence.in_network += weight_prev;
            prominence.in_network += weight_prom;
        } else {
            prevalence.out_of_network += weight_prev;
            prominence.out_of_network += weight_prom;
        }
    }
    Ok(SourceVectors { prevalence, prominence })
}

/// Which group a pre/post vector pair came from; treatment pairs carry
/// their treatment topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaGroup<'a> {
    Treatment { topic: &'a str },
    Control,
}

/// A pre/post vector pair of one of the three summary kinds.
#[derive(Debug, Clone, Copy)]
pub enum VectorPair<'a> {
    TopicCategory {
        pre: &'a BTreeMap<String, f64>,
        post: &'a BTreeMap<String, f64>,
    },
    SourceCategory { pre: SourceSplit, post: SourceSplit },
    Embedding { pre: &'a [f64], post: &'a [f64] },
}

/// Scalar change between a pre- and post-treatment composition pair.
///
/// Topic-category pairs difference the treatment topic's component
/// ("Cooking" for control); source-category pairs difference the
/// in-network component for both groups; embedding pairs use Euclidean
/// distance for both groups.
pub fn composition_delta(group: DeltaGroup, pair: VectorPair) -> Result<f64> {
    match pair {
        VectorPair::TopicCategory { pre, post } => {
            let key = match group {
                DeltaGroup::Treatment { topic } => topic,
                DeltaGroup::Control => crate::sim::COOKING_LABEL,
            };
            match (pre.get(key), post.get(key)) {
                (Some(a), Some(b)) => Ok(b - a),
                _ => Err(Error::Analysis(format!("unknown topic key {key:?} in category vector"))),
            }
        }
        VectorPair::SourceCategory { pre, post } => Ok(post.in_network - pre.in_network),
        VectorPair::Embedding { pre, post } => {
            if pre.len() != post.len() {
                return Err(Error::Analysis(format!(
                    "embedding dimension mismatch: {} vs {}",
                    pre.len(),
                    post.len()
                )));
            }
            Ok(pre
                .iter()
                .zip(post)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt())
        }
    }
}
