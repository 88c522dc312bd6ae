//! Immutable content library: posts, sources, and the static search
//! rankings the sockpuppets interact with.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::composition::embed::{EmbeddingProvider, TopicAnchorProvider};
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::params::{LibraryParams, PlatformParams, SearchMode};

pub const COOKING_LABEL: &str = "Cooking";
pub const OTHER_TOPIC: &str = "Other";
pub const DEFAULT_PRIMER_TOPICS: [&str; 3] =
    ["Breakfast Recipes", "Lunch Recipes", "Dinner Recipes"];

/// The topics a library is generated over, and how raw topics map onto
/// the label set used by the composition vectors (treatment topics keep
/// their names; primer topics collapse to "Cooking"; the rest is "Other").
#[derive(Debug, Clone)]
pub struct TopicUniverse {
    pub treatment_topics: Vec<String>,
    pub primer_topics: Vec<String>,
}

impl TopicUniverse {
    pub fn new(treatment_topics: Vec<String>, primer_topics: Vec<String>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for t in treatment_topics.iter().chain(primer_topics.iter()) {
            if !seen.insert(t.clone()) {
                problems.push(format!("duplicate topic {t:?}"));
            }
            if t == OTHER_TOPIC || t == COOKING_LABEL {
                problems.push(format!("topic name {t:?} is reserved"));
            }
            if t.is_empty() || t.contains(['\t', '\n', '\r']) {
                problems.push(format!("topic name {t:?} is empty or contains control characters"));
            }
        }
        if treatment_topics.is_empty() {
            problems.push("at least one treatment topic required".into());
        }
        if primer_topics.is_empty() {
            problems.push("at least one primer topic required".into());
        }
        if problems.is_empty() {
            Ok(TopicUniverse { treatment_topics, primer_topics })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn with_default_primers(treatment_topics: Vec<String>) -> Result<Self> {
        TopicUniverse::new(
            treatment_topics,
            DEFAULT_PRIMER_TOPICS.iter().map(|s| s.to_string()).collect(),
        )
    }

    /// Every raw topic the library generates content for, sorted.
    pub fn all_topics(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .treatment_topics
            .iter()
            .chain(self.primer_topics.iter())
            .cloned()
            .collect();
        all.push(OTHER_TOPIC.to_string());
        all.sort();
        all
    }

    /// Label universe for composition vectors: treatment topics plus
    /// "Cooking" and "Other".
    pub fn labels(&self) -> Vec<String> {
        let mut labels = self.treatment_topics.clone();
        labels.push(COOKING_LABEL.to_string());
        labels.push(OTHER_TOPIC.to_string());
        labels
    }

    /// Maps a raw post topic onto its composition label.
    pub fn label_for(&self, raw_topic: &str) -> String {
        if self.treatment_topics.iter().any(|t| t == raw_topic) {
            raw_topic.to_string()
        } else if self.primer_topics.iter().any(|t| t == raw_topic) {
            COOKING_LABEL.to_string()
        } else {
            OTHER_TOPIC.to_string()
        }
    }

    pub fn contains(&self, topic: &str) -> bool {
        topic == OTHER_TOPIC
            || self.treatment_topics.iter().any(|t| t == topic)
            || self.primer_topics.iter().any(|t| t == topic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SourceKind {
    Creator,
    Community,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::Creator => "creator",
            SourceKind::Community => "community",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceRecord {
    pub source_id: String,
    pub kind: SourceKind,
    pub primary_topic: String,
    pub topic_diversity: f64,
    pub popularity: f64,
}

#[derive(Debug, Clone)]
pub struct PostRecord {
    pub post_id: String,
    pub source_id: String,
    pub true_topic: String,
    pub text: String,
    pub embedding: Vec<f64>,
    pub created_tick: i64,
    pub popularity: f64,
}

/// Generated once per trial, then shared read-only across every
/// sockpuppet (accounts never mutate the library).
#[derive(Debug)]
pub struct ContentLibrary {
    pub universe: TopicUniverse,
    posts: Vec<Arc<PostRecord>>,
    sources: Vec<Arc<SourceRecord>>,
    /// Search rankings per (topic, mode), precomputed: popularity
    /// descending, ties by ascending identifier.
    content_rank: BTreeMap<String, Vec<usize>>,
    community_rank: BTreeMap<String, Vec<usize>>,
    user_rank: BTreeMap<String, Vec<usize>>,
}

impl ContentLibrary {
    /// Deterministic for a given (universe, params, seed).
    pub fn generate(
        universe: TopicUniverse,
        lib: &LibraryParams,
        platform: &PlatformParams,
        seed: u64,
    ) -> Result<ContentLibrary> {
        lib.validate()?;
        let all_topics = universe.all_topics();
        if platform.embedding_dim < all_topics.len() {
            return Err(Error::validation(format!(
                "embedding_dim {} smaller than topic universe size {}",
                platform.embedding_dim,
                all_topics.len()
            )));
        }
        let provider = TopicAnchorProvider::new(&all_topics, platform.embedding_dim);
        let mut gen = rng::rng_from(&[seed, rng::hash_str("library")]);

        let mut sources: Vec<Arc<SourceRecord>> = Vec::new();
        let mut posts: Vec<Arc<PostRecord>> = Vec::new();

        let named_topics: Vec<&String> = universe
            .treatment_topics
            .iter()
            .chain(universe.primer_topics.iter())
            .collect();

        // Named topics share one drawn profile (source popularity,
        // post popularity, creation ticks, off-topic flags), so treatment
        // topics are statistically identical by construction and measured
        // differences between them reflect treatments, not library luck.
        // Off-topic posts land in the background pool's topic.
        //
        // Sources post on a regular cadence: one post per equal slice of
        // the creation span, jittered within the slice. Every source then
        // has the same number of already-created posts at any tick.
        let half_span = lib.created_tick_span / 2;
        let slice = lib.created_tick_span as f64 / lib.posts_per_source as f64;
        fn cadence(
            gen: &mut rand_chacha::ChaCha8Rng,
            j: usize,
            half_span: i64,
            slice: f64,
        ) -> i64 {
            let at = -half_span as f64 + (j as f64 + gen.gen::<f64>()) * slice;
            (at.floor() as i64).clamp(-half_span, half_span - 1)
        }
        struct PostTemplate {
            popularity: f64,
            created_tick: i64,
            off_topic: bool,
        }
        struct SourceTemplate {
            kind: SourceKind,
            popularity: f64,
            posts: Vec<PostTemplate>,
        }
        let template: Vec<SourceTemplate> = (0..lib.sources_per_topic)
            .map(|i| {
                // alternate kinds so community and user searches both
                // always have enough results
                let kind =
                    if i % 2 == 0 { SourceKind::Community } else { SourceKind::Creator };
                let popularity = gen.gen::<f64>();
                let posts = (0..lib.posts_per_source)
                    .map(|j| PostTemplate {
                        popularity: gen.gen::<f64>(),
                        created_tick: cadence(&mut gen, j, half_span, slice),
                        off_topic: gen.gen::<f64>() < lib.topic_diversity,
                    })
                    .collect();
                SourceTemplate { kind, popularity, posts }
            })
            .collect();

        let mut source_counter = 0usize;
        let mut post_counter = 0usize;
        for topic in &named_topics {
            for st in &template {
                let source_id = format!("s{source_counter:05}");
                source_counter += 1;
                sources.push(Arc::new(SourceRecord {
                    source_id: source_id.clone(),
                    kind: st.kind,
                    primary_topic: (*topic).clone(),
                    topic_diversity: lib.topic_diversity,
                    popularity: st.popularity,
                }));
                for (n, pt) in st.posts.iter().enumerate() {
                    let post_topic =
                        if pt.off_topic { OTHER_TOPIC.to_string() } else { (*topic).clone() };
                    let text = format!("{post_topic} story {n} by {source_id}");
                    let embedding = provider.embed(&post_topic, &text)?;
                    posts.push(Arc::new(PostRecord {
                        post_id: format!("p{post_counter:06}"),
                        source_id: source_id.clone(),
                        true_topic: post_topic,
                        text,
                        embedding,
                        created_tick: pt.created_tick,
                        popularity: pt.popularity,
                    }));
                    post_counter += 1;
                }
            }
        }

        // background pool, drawn independently
        for i in 0..lib.other_sources {
            let source_id = format!("s{source_counter:05}");
            source_counter += 1;
            sources.push(Arc::new(SourceRecord {
                source_id: source_id.clone(),
                kind: if i % 2 == 0 { SourceKind::Community } else { SourceKind::Creator },
                primary_topic: OTHER_TOPIC.to_string(),
                topic_diversity: lib.topic_diversity,
                popularity: gen.gen::<f64>(),
            }));
            for n in 0..lib.posts_per_source {
                let text = format!("{OTHER_TOPIC} story {n} by {source_id}");
                let embedding = provider.embed(OTHER_TOPIC, &text)?;
                let created_tick = cadence(&mut gen, n, half_span, slice);
                posts.push(Arc::new(PostRecord {
                    post_id: format!("p{post_counter:06}"),
                    source_id: source_id.clone(),
                    true_topic: OTHER_TOPIC.to_string(),
                    text,
                    embedding,
                    created_tick,
                    popularity: gen.gen::<f64>(),
                }));
                post_counter += 1;
            }
        }

        let mut library = ContentLibrary {
            universe,
            posts,
            sources,
            content_rank: BTreeMap::new(),
            community_rank: BTreeMap::new(),
            user_rank: BTreeMap::new(),
        };
        library.build_rankings();
        Ok(library)
    }

    fn build_rankings(&mut self) {
        for topic in self.universe.all_topics() {
            let mut by_pop: Vec<usize> = (0..self.posts.len())
                .filter(|&i| self.posts[i].true_topic == topic)
                .collect();
            by_pop.sort_by(|&a, &b| {
                self.posts[b]
                    .popularity
                    .total_cmp(&self.posts[a].popularity)
                    .then_with(|| self.posts[a].post_id.cmp(&self.posts[b].post_id))
            });
            self.content_rank.insert(topic.clone(), by_pop);

            for (kind, map) in [
                (SourceKind::Community, &mut self.community_rank),
                (SourceKind::Creator, &mut self.user_rank),
            ] {
                let mut srcs: Vec<usize> = (0..self.sources.len())
                    .filter(|&i| {
                        self.sources[i].primary_topic == topic && self.sources[i].kind == kind
                    })
                    .collect();
                srcs.sort_by(|&a, &b| {
                    self.sources[b]
                        .popularity
                        .total_cmp(&self.sources[a].popularity)
                        .then_with(|| {
                            self.sources[a].source_id.cmp(&self.sources[b].source_id)
                        })
                });
                map.insert(topic.clone(), srcs);
            }
        }
    }

    pub fn posts(&self) -> &[Arc<PostRecord>] {
        &self.posts
    }

    pub fn sources(&self) -> &[Arc<SourceRecord>] {
        &self.sources
    }

    pub fn source_by_id(&self, id: &str) -> Option<&Arc<SourceRecord>> {
        self.sources.iter().find(|s| s.source_id == id)
    }

    pub fn embedding_provider(&self, dim: usize) -> TopicAnchorProvider {
        TopicAnchorProvider::new(&self.universe.all_topics(), dim)
    }

    /// Search results for a topic, ordered by descending popularity with
    /// ties broken by ascending identifier. Pure: account state never
    /// affects the ranking. Errors when fewer than `min_results` matches
    /// exist (the sparse-library case the treatment topics must avoid).
    pub fn search(&self, query_topic: &str, mode: SearchMode, min_results: usize) -> Result<SearchResults> {
        if !self.universe.contains(query_topic) {
            return Err(Error::validation(format!(
                "query topic {query_topic:?} is not in the topic universe"
            )));
        }
        let found = match mode {
            SearchMode::Content => self
                .content_rank
                .get(query_topic)
                .map(|idx| SearchResults::Posts(idx.iter().map(|&i| self.posts[i].clone()).collect())),
            SearchMode::Communities => self.community_rank.get(query_topic).map(|idx| {
                SearchResults::Sources(idx.iter().map(|&i| self.sources[i].clone()).collect())
            }),
            SearchMode::Users => self
                .user_rank
                .get(query_topic)
                .map(|idx| SearchResults::Sources(idx.iter().map(|&i| self.sources[i].clone()).collect())),
        };
        let results = found.unwrap_or(SearchResults::Posts(Vec::new()));
        if results.len() < min_results {
            return Err(Error::SparseLibrary {
                topic: query_topic.to_string(),
                mode: mode.name().to_string(),
                found: results.len(),
                need: min_results,
            });
        }
        Ok(results)
    }
}

#[derive(Debug, Clone)]
pub enum SearchResults {
    Posts(Vec<Arc<PostRecord>>),
    Sources(Vec<Arc<SourceRecord>>),
}

impl SearchResults {
    pub fn len(&self) -> usize {
        match self {
            SearchResults::Posts(p) => p.len(),
            SearchResults::Sources(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
