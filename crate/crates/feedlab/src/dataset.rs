//! Composed observation dataset: trial logs joined with per-snapshot
//! composition vectors and reconstructed interaction histories.
//!
//! The log format stores feed snapshots only, so per-snapshot histories
//! (which topics and sources had been interacted with by then) are
//! reconstructed by replaying each puppet's schedule against the
//! library's static search rankings; search results do not depend on
//! account state, which makes the replay exact.
//!
//! Post labels come from the embedding + clustering workflow: every
//! unique post in the dataset is embedded, clustered with the elbow rule,
//! and each cluster takes the majority label of its members.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::composition::{
    composition_delta, compute_source_vectors, compute_topic_vectors, fit_topic_clusters,
    ClusterModel, CompositionVectors, DeltaGroup, EmbeddingProvider, VectorPair,
};
use crate::effects::{observed_effect, InfluenceCell, TreatmentEffectEstimate};
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::{
    ContentLibrary, FeedPage, Interaction, PostRecord, SearchMode, SearchResults,
};
use crate::trial::{ObservationLog, PuppetRole, TreatmentPair, TrialPlan, PRIMER_DOSES};

/// The five per-feed summaries deltas can be measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Measure {
    TopicPrevalence,
    TopicProminence,
    AvgEmbedding,
    SourcePrevalence,
    SourceProminence,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::TopicPrevalence,
        Measure::TopicProminence,
        Measure::AvgEmbedding,
        Measure::SourcePrevalence,
        Measure::SourceProminence,
    ];

    pub const TOPIC_MEASURES: [Measure; 3] =
        [Measure::TopicPrevalence, Measure::TopicProminence, Measure::AvgEmbedding];

    pub const SOURCE_MEASURES: [Measure; 2] =
        [Measure::SourcePrevalence, Measure::SourceProminence];

    pub fn name(self) -> &'static str {
        match self {
            Measure::TopicPrevalence => "TopicPrevalence",
            Measure::TopicProminence => "TopicProminence",
            Measure::AvgEmbedding => "AvgEmbedding",
            Measure::SourcePrevalence => "SourcePrevalence",
            Measure::SourceProminence => "SourceProminence",
        }
    }
}

/// One snapshot with everything the estimators need.
#[derive(Debug, Clone)]
pub struct SnapshotView {
    pub position: Option<usize>,
    pub topic: Option<String>,
    pub dose_index: usize,
    pub tick: u64,
    pub feed: FeedPage,
    pub vectors: CompositionVectors,
    /// Labels of topics interacted with so far.
    pub history_topics: BTreeSet<String>,
    /// Sources interacted with so far (the in-network set).
    pub history_sources: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct PuppetView {
    pub account_id: String,
    pub interaction: Interaction,
    pub pair_index: usize,
    /// None for control puppets.
    pub sequence_index: Option<usize>,
    pub sequence_topics: Option<Vec<String>>,
    pub snapshots: Vec<SnapshotView>,
}

impl PuppetView {
    pub fn is_control(&self) -> bool {
        self.sequence_index.is_none()
    }

    /// Position (1-based) of a topic in this puppet's sequence.
    pub fn position_of(&self, topic: &str) -> Option<usize> {
        self.sequence_topics
            .as_ref()
            .and_then(|ts| ts.iter().position(|t| t == topic).map(|p| p + 1))
    }

    pub fn snapshot(&self, position: usize, dose: usize) -> Option<&SnapshotView> {
        self.snapshots
            .iter()
            .find(|s| s.position == Some(position) && s.dose_index == dose)
    }
}

#[derive(Debug)]
pub struct ComposedDataset {
    pub puppets: Vec<PuppetView>,
    pub topics: Vec<String>,
    pub interactions: Vec<Interaction>,
    pub doses_per_topic: usize,
    pub label_universe: Vec<String>,
    /// post id -> assigned label.
    pub post_labels: BTreeMap<String, String>,
    pub cluster_model: Option<ClusterModel>,
    /// Puppets dropped by pairwise exclusion before composition.
    pub excluded_puppets: usize,
}

/// How post labels are assigned when composing a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Embed, cluster, majority-label (the production path).
    Clustered { kmeans_seed: u64 },
    /// Trust the generator's topic directly (test shortcut).
    TrueTopic,
}

fn replay_error(account: &str, e: Error) -> Error {
    Error::Analysis(format!("history replay for {account}: {e}"))
}

/// Sources targeted by the priming routine; identical for every primer
/// round because search rankings are static.
fn primer_sources(library: &ContentLibrary, plan: &TrialPlan) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for topic in &plan.primer_topics {
        match library.search(topic, SearchMode::Content, PRIMER_DOSES)? {
            SearchResults::Posts(posts) => {
                for p in posts.iter().take(PRIMER_DOSES) {
                    out.insert(p.source_id.clone());
                }
            }
            SearchResults::Sources(_) => unreachable!("content search returns posts"),
        }
    }
    Ok(out)
}

/// Source targeted by the d-th dose of (interaction, topic), if any.
fn dose_target_source(
    library: &ContentLibrary,
    interaction: Interaction,
    topic: &str,
    dose: usize,
) -> Result<Option<String>> {
    let need = dose.max(5);
    match interaction {
        Interaction::Search | Interaction::Control => Ok(None),
        Interaction::Open | Interaction::Like => {
            match library.search(topic, SearchMode::Content, need)? {
                SearchResults::Posts(posts) => Ok(Some(posts[dose - 1].source_id.clone())),
                SearchResults::Sources(_) => unreachable!(),
            }
        }
        Interaction::Join | Interaction::Follow => {
            let mode = if interaction == Interaction::Join {
                SearchMode::Communities
            } else {
                SearchMode::Users
            };
            match library.search(topic, mode, need)? {
                SearchResults::Sources(sources) => Ok(Some(sources[dose - 1].source_id.clone())),
                SearchResults::Posts(_) => unreachable!(),
            }
        }
    }
}

impl ComposedDataset {
    pub fn build(
        logs: &[&ObservationLog],
        excluded_puppets: usize,
        library: &ContentLibrary,
        plan: &TrialPlan,
        provider: &dyn EmbeddingProvider,
        labeling: Labeling,
    ) -> Result<ComposedDataset> {
        let universe = &library.universe;
        let label_universe = universe.labels();

        // one canonical record per unique post, re-embedded through the
        // provider so file-loaded and in-memory datasets agree
        let mut unique: BTreeMap<String, Arc<PostRecord>> = BTreeMap::new();
        for log in logs {
            for snap in &log.snapshots {
                for entry in &snap.feed.entries {
                    if !unique.contains_key(&entry.post.post_id) {
                        let mut record = (*entry.post).clone();
                        record.embedding = provider.embed(&record.true_topic, &record.text)?;
                        unique.insert(record.post_id.clone(), Arc::new(record));
                    }
                }
            }
        }

        let (post_labels, cluster_model) = match labeling {
            Labeling::TrueTopic => {
                let labels = unique
                    .values()
                    .map(|p| (p.post_id.clone(), universe.label_for(&p.true_topic)))
                    .collect();
                (labels, None)
            }
            Labeling::Clustered { kmeans_seed } => {
                let ids: Vec<&String> = unique.keys().collect();
                let points: Vec<Vec<f64>> =
                    ids.iter().map(|id| unique[*id].embedding.clone()).collect();
                let true_labels: Vec<String> =
                    ids.iter().map(|id| universe.label_for(&unique[*id].true_topic)).collect();
                let k_max = 8.min(points.len());
                let mut model = fit_topic_clusters(&points, 1..=k_max, kmeans_seed)?;
                model.assign_majority_labels(&true_labels)?;
                let labels = ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| {
                        let label = model
                            .label_of_point(i)
                            .unwrap_or(crate::sim::OTHER_TOPIC)
                            .to_string();
                        ((*id).clone(), label)
                    })
                    .collect();
                (labels, Some(model))
            }
        };

        let primer_srcs = primer_sources(library, plan)?;
        let primer_topic_labels: BTreeSet<String> =
            plan.primer_topics.iter().map(|t| universe.label_for(t)).collect();

        let puppet_results: Vec<Result<PuppetView>> = logs
            .par_iter()
            .map(|log| {
                compose_puppet(
                    log,
                    library,
                    plan,
                    &unique,
                    &post_labels,
                    &label_universe,
                    &primer_srcs,
                    &primer_topic_labels,
                )
            })
            .collect();
        let mut puppets = Vec::with_capacity(puppet_results.len());
        for r in puppet_results {
            puppets.push(r?);
        }
        puppets.sort_by(|a, b| a.account_id.cmp(&b.account_id));

        Ok(ComposedDataset {
            puppets,
            topics: plan.topics.clone(),
            interactions: plan.interactions.clone(),
            doses_per_topic: plan.doses_per_topic,
            label_universe,
            post_labels,
            cluster_model,
            excluded_puppets,
        })
    }

    pub fn treatment_puppets(&self, action: Interaction) -> Vec<&PuppetView> {
        self.puppets
            .iter()
            .filter(|p| p.interaction == action && !p.is_control())
            .collect()
    }

    pub fn control_puppets(&self, action: Interaction) -> Vec<&PuppetView> {
        self.puppets
            .iter()
            .filter(|p| p.interaction == action && p.is_control())
            .collect()
    }

    /// Scalar composition change for one puppet between the block's
    /// pre-treatment snapshot and the snapshot after `to_dose` doses.
    pub fn block_delta(
        &self,
        puppet: &PuppetView,
        position: usize,
        to_dose: usize,
        measure: Measure,
    ) -> Result<f64> {
        let pre = puppet
            .snapshot(position, 0)
            .ok_or_else(|| Error::Analysis(format!(
                "{}: missing pre-treatment snapshot for block {position}",
                puppet.account_id
            )))?;
        let post = puppet
            .snapshot(position, to_dose)
            .ok_or_else(|| Error::Analysis(format!(
                "{}: missing dose-{to_dose} snapshot for block {position}",
                puppet.account_id
            )))?;
        let group = match &post.topic {
            Some(t) => DeltaGroup::Treatment { topic: t },
            None => DeltaGroup::Control,
        };
        let pair = match measure {
            Measure::TopicPrevalence => VectorPair::TopicCategory {
                pre: &pre.vectors.topic_prevalence,
                post: &post.vectors.topic_prevalence,
            },
            Measure::TopicProminence => VectorPair::TopicCategory {
                pre: &pre.vectors.topic_prominence,
                post: &post.vectors.topic_prominence,
            },
            Measure::AvgEmbedding => VectorPair::Embedding {
                pre: &pre.vectors.avg_embedding,
                post: &post.vectors.avg_embedding,
            },
            Measure::SourcePrevalence => VectorPair::SourceCategory {
                pre: pre.vectors.source_prevalence,
                post: post.vectors.source_prevalence,
            },
            Measure::SourceProminence => VectorPair::SourceCategory {
                pre: pre.vectors.source_prominence,
                post: post.vectors.source_prominence,
            },
        };
        composition_delta(group, pair)
    }

    /// Treatment and control deltas for one (topic, action) pair measured
    /// through `to_dose`, ordered sequence-major then pair-index so the
    /// k-th treatment delta lines up with its paired control.
    pub fn paired_deltas(
        &self,
        pair: &TreatmentPair,
        to_dose: usize,
        measure: Measure,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let controls = self.control_puppets(pair.action);
        let mut treatment = Vec::new();
        let mut control = Vec::new();
        let mut sequence_indices: Vec<usize> = self
            .treatment_puppets(pair.action)
            .iter()
            .filter_map(|p| p.sequence_index)
            .collect();
        sequence_indices.sort();
        sequence_indices.dedup();

        let treatments = self.treatment_puppets(pair.action);
        for seq in sequence_indices {
            let mut members: Vec<&&PuppetView> =
                treatments.iter().filter(|p| p.sequence_index == Some(seq)).collect();
            members.sort_by_key(|p| p.pair_index);
            for puppet in members {
                let Some(position) = puppet.position_of(&pair.topic) else {
                    continue;
                };
                treatment.push(self.block_delta(puppet, position, to_dose, measure)?);
                let paired = controls
                    .iter()
                    .find(|c| c.pair_index == puppet.pair_index)
                    .ok_or_else(|| Error::Analysis(format!(
                        "no paired control for {}",
                        puppet.account_id
                    )))?;
                control.push(self.block_delta(paired, position, to_dose, measure)?);
            }
        }
        if treatment.is_empty() {
            return Err(Error::Analysis(format!(
                "dataset has no treatment blocks for ({}, {})",
                pair.topic, pair.action
            )));
        }
        Ok((treatment, control))
    }

    /// Pooled diff-in-diff estimate for one pair at full dose.
    pub fn pair_estimate(
        &self,
        pair: &TreatmentPair,
        measure: Measure,
        alpha: f64,
    ) -> Result<TreatmentEffectEstimate> {
        let (t, c) = self.paired_deltas(pair, self.doses_per_topic, measure)?;
        observed_effect(pair.clone(), &t, &c, alpha)
    }

    /// Per-position effect cells for the influence decomposition: one
    /// n-vs-n estimate per (topic, action, position).
    pub fn position_cells(&self, measure: Measure, alpha: f64) -> Result<Vec<InfluenceCell>> {
        let mut cells = Vec::new();
        for &action in &self.interactions {
            let controls = self.control_puppets(action);
            let treatments = self.treatment_puppets(action);
            let mut seqs: Vec<usize> =
                treatments.iter().filter_map(|p| p.sequence_index).collect();
            seqs.sort();
            seqs.dedup();
            for seq in seqs {
                let mut members: Vec<&&PuppetView> = treatments
                    .iter()
                    .filter(|p| p.sequence_index == Some(seq))
                    .collect();
                members.sort_by_key(|p| p.pair_index);
                let Some(first) = members.first() else { continue };
                let topics = first.sequence_topics.clone().unwrap_or_default();
                for (position, topic) in topics.iter().enumerate().map(|(i, t)| (i + 1, t)) {
                    let mut t_deltas = Vec::new();
                    let mut c_deltas = Vec::new();
                    for puppet in &members {
                        t_deltas.push(self.block_delta(
                            puppet,
                            position,
                            self.doses_per_topic,
                            measure,
                        )?);
                        let paired = controls
                            .iter()
                            .find(|c| c.pair_index == puppet.pair_index)
                            .ok_or_else(|| Error::Analysis(format!(
                                "no paired control for {}",
                                puppet.account_id
                            )))?;
                        c_deltas.push(self.block_delta(
                            paired,
                            position,
                            self.doses_per_topic,
                            measure,
                        )?);
                    }
                    let est = observed_effect(
                        TreatmentPair::new(topic.clone(), action),
                        &t_deltas,
                        &c_deltas,
                        alpha,
                    )?;
                    cells.push(InfluenceCell {
                        topic: topic.clone(),
                        action,
                        position,
                        mu_hat: est.mu_hat,
                    });
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Analysis("no treatment blocks in dataset".into()));
        }
        Ok(cells)
    }

    /// Per-sequence groups of per-puppet summed treatment effects for the
    /// carryover ANOVA.
    pub fn carryover_groups(
        &self,
        action: Interaction,
        measure: Measure,
    ) -> Result<Vec<Vec<f64>>> {
        let controls = self.control_puppets(action);
        let treatments = self.treatment_puppets(action);
        let mut seqs: Vec<usize> = treatments.iter().filter_map(|p| p.sequence_index).collect();
        seqs.sort();
        seqs.dedup();
        let mut groups = Vec::new();
        for seq in seqs {
            let mut sums = Vec::new();
            for puppet in treatments.iter().filter(|p| p.sequence_index == Some(seq)) {
                let paired = controls
                    .iter()
                    .find(|c| c.pair_index == puppet.pair_index)
                    .ok_or_else(|| Error::Analysis(format!(
                        "no paired control for {}",
                        puppet.account_id
                    )))?;
                let positions = puppet.sequence_topics.as_ref().map(|t| t.len()).unwrap_or(0);
                let mut sum = 0.0;
                for position in 1..=positions {
                    sum += self.block_delta(puppet, position, self.doses_per_topic, measure)?
                        - self.block_delta(paired, position, self.doses_per_topic, measure)?;
                }
                sums.push(sum);
            }
            groups.push(sums);
        }
        Ok(groups)
    }
}

#[allow(clippy::too_many_arguments)]
fn compose_puppet(
    log: &ObservationLog,
    library: &ContentLibrary,
    plan: &TrialPlan,
    unique: &BTreeMap<String, Arc<PostRecord>>,
    post_labels: &BTreeMap<String, String>,
    label_universe: &[String],
    primer_srcs: &BTreeSet<String>,
    primer_topic_labels: &BTreeSet<String>,
) -> Result<PuppetView> {
    let assignment = &log.assignment;
    let account = assignment.account_id.as_str();
    let universe = &library.universe;

    // dose target sources per (position, dose), replayed from static
    // search rankings
    let mut block_targets: BTreeMap<(usize, usize), Option<String>> = BTreeMap::new();
    if let PuppetRole::Treatment { sequence } = &assignment.role {
        for (i, topic) in sequence.topics.iter().enumerate() {
            for dose in 1..=plan.doses_per_topic {
                let target =
                    dose_target_source(library, assignment.interaction, topic, dose)
                        .map_err(|e| replay_error(account, e))?;
                block_targets.insert((i + 1, dose), target);
            }
        }
    }

    let mut snapshots = Vec::with_capacity(log.snapshots.len());
    for snap in &log.snapshots {
        // history up to this snapshot
        let mut history_sources = primer_srcs.clone();
        let mut history_topics = primer_topic_labels.clone();
        if let (PuppetRole::Treatment { sequence }, Some(position)) =
            (&assignment.role, snap.position)
        {
            for (i, topic) in sequence.topics.iter().enumerate() {
                let block = i + 1;
                let doses_done = if block < position {
                    plan.doses_per_topic
                } else if block == position {
                    snap.dose_index
                } else {
                    0
                };
                if doses_done > 0 {
                    history_topics.insert(universe.label_for(topic));
                }
                for d in 1..=doses_done {
                    if let Some(Some(src)) = block_targets.get(&(block, d)) {
                        history_sources.insert(src.clone());
                    }
                }
            }
        }

        // canonical posts with provider embeddings
        let feed = FeedPage {
            account_id: snap.feed.account_id.clone(),
            tick: snap.feed.tick,
            entries: snap
                .feed
                .entries
                .iter()
                .map(|e| crate::sim::FeedEntry {
                    rank: e.rank,
                    post: unique[&e.post.post_id].clone(),
                })
                .collect(),
        };

        let topic_vectors = compute_topic_vectors(&feed, label_universe, |p| {
            post_labels
                .get(&p.post_id)
                .cloned()
                .ok_or_else(|| Error::Analysis(format!("post {} has no label", p.post_id)))
        })?;
        let source_vectors = compute_source_vectors(&feed, &history_sources)?;

        snapshots.push(SnapshotView {
            position: snap.position,
            topic: snap.topic.clone(),
            dose_index: snap.dose_index,
            tick: snap.feed.tick,
            feed,
            vectors: CompositionVectors::combine(topic_vectors, source_vectors),
            history_topics,
            history_sources,
        });
    }

    Ok(PuppetView {
        account_id: assignment.account_id.clone(),
        interaction: assignment.interaction,
        pair_index: assignment.pair_index,
        sequence_index: assignment.sequence().map(|s| s.index),
        sequence_topics: assignment.sequence().map(|s| s.topics.clone()),
        snapshots,
    })
}

/// Convenience wrapper: run pairwise exclusion on a trial dataset and
/// compose it.
pub fn compose_trial(
    dataset: &crate::trial::TrialDataset,
    library: &ContentLibrary,
    plan: &TrialPlan,
    provider: &dyn EmbeddingProvider,
    labeling: Labeling,
) -> Result<ComposedDataset> {
    let (logs, excluded) = dataset.usable_logs();
    ComposedDataset::build(&logs, excluded, library, plan, provider, labeling)
}

/// Deterministic k-means seed derived from the master seed.
pub fn kmeans_seed_from(master_seed: u64) -> u64 {
    rng::mix(&[master_seed, rng::hash_str("kmeans")])
}
