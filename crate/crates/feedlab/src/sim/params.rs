//! Platform and library knobs.
//!
//! Every knob maps to a behavior a homepage-feed audit has to contend
//! with: ranking dominance of explicit associations (`beta_source`),
//! timeliness (`freshness_halflife` over a content stream), score jitter
//! (`noise_scale`), cold-start fallback, and saturating response to
//! repeated identical interactions (`dose_saturation`).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// The interaction kinds a sockpuppet can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Interaction {
    Search,
    Open,
    Like,
    Join,
    Follow,
    /// No-op: advances the clock and leaves a history marker, nothing else.
    Control,
}

impl Interaction {
    pub const ALL_TREATMENTS: [Interaction; 5] = [
        Interaction::Search,
        Interaction::Open,
        Interaction::Like,
        Interaction::Join,
        Interaction::Follow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Interaction::Search => "search",
            Interaction::Open => "open",
            Interaction::Like => "like",
            Interaction::Join => "join",
            Interaction::Follow => "follow",
            Interaction::Control => "control",
        }
    }

    pub fn parse(s: &str) -> Result<Interaction> {
        match s.to_ascii_lowercase().as_str() {
            "search" => Ok(Interaction::Search),
            "open" => Ok(Interaction::Open),
            "like" => Ok(Interaction::Like),
            "join" => Ok(Interaction::Join),
            "follow" => Ok(Interaction::Follow),
            "control" => Ok(Interaction::Control),
            other => Err(Error::validation(format!("unknown interaction {other:?}"))),
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a search returns: posts, communities, or individual creators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Content,
    Communities,
    Users,
}

impl SearchMode {
    pub fn name(self) -> &'static str {
        match self {
            SearchMode::Content => "content",
            SearchMode::Communities => "communities",
            SearchMode::Users => "users",
        }
    }
}

/// Ground-truth platform behavior. The audit pipeline never reads these;
/// they exist so estimates can be checked against something known.
#[derive(Debug, Clone)]
pub struct PlatformParams {
    /// Engagement weight planted per interaction.
    pub interaction_weights: BTreeMap<Interaction, f64>,
    /// Saturation constant per interaction: the k-th identical
    /// (topic, interaction) repetition adds weight * s / (s + k - 1).
    /// Infinity disables saturation.
    pub dose_saturation: BTreeMap<Interaction, f64>,
    /// Fraction of feed slots reserved for content unrelated to anything
    /// the account has engaged with.
    pub explore_quota: f64,
    pub feed_length: usize,
    /// Half-life, in ticks, of the freshness score component.
    pub freshness_halflife: f64,
    /// Only posts at most this many ticks old are ranking candidates,
    /// the way production feeds restrict candidate generation to recent
    /// content. Infinity disables the cap.
    pub max_candidate_age: f64,
    /// Half-life, in ticks, of recorded engagement: each tick multiplies
    /// all engagement values by 2^(-1/halflife), so stale interactions
    /// expire the way production ranking systems age out engagement
    /// signals. Infinity disables decay.
    pub engagement_halflife: f64,
    /// Standard deviation of the per-post score jitter.
    pub noise_scale: f64,
    /// Below this total engagement mass the feed falls back to trending.
    pub cold_start_min_signal: f64,
    /// Multiplier on the source-engagement score component.
    pub beta_source: f64,
    pub embedding_dim: usize,
    pub rng_seed: u64,
}

impl Default for PlatformParams {
    fn default() -> Self {
        let weights = [
            (Interaction::Search, 0.0),
            (Interaction::Open, 0.4),
            (Interaction::Like, 0.8),
            (Interaction::Join, 1.2),
            (Interaction::Follow, 0.6),
            (Interaction::Control, 0.0),
        ];
        let saturation = Interaction::ALL_TREATMENTS
            .iter()
            .map(|&i| (i, 0.05))
            .chain([(Interaction::Control, f64::INFINITY)])
            .collect();
        PlatformParams {
            interaction_weights: weights.into_iter().collect(),
            dose_saturation: saturation,
            explore_quota: 0.1,
            feed_length: 30,
            freshness_halflife: 8.0,
            max_candidate_age: 48.0,
            engagement_halflife: f64::INFINITY,
            noise_scale: 0.05,
            cold_start_min_signal: 0.5,
            beta_source: 1.5,
            embedding_dim: 16,
            rng_seed: 0,
        }
    }
}

impl PlatformParams {
    pub fn weight(&self, interaction: Interaction) -> f64 {
        self.interaction_weights.get(&interaction).copied().unwrap_or(0.0)
    }

    pub fn saturation(&self, interaction: Interaction) -> f64 {
        self.dose_saturation
            .get(&interaction)
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    /// Collects every violation rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (k, w) in &self.interaction_weights {
            if !w.is_finite() || *w < 0.0 {
                problems.push(format!("interaction_weights.{k}: must be finite and >= 0, got {w}"));
            }
        }
        for (k, s) in &self.dose_saturation {
            if s.is_nan() || *s <= 0.0 {
                problems.push(format!("dose_saturation.{k}: must be positive, got {s}"));
            }
        }
        if !(0.0..=1.0).contains(&self.explore_quota) {
            problems.push(format!("explore_quota: must be in [0,1], got {}", self.explore_quota));
        }
        if self.feed_length < 1 {
            problems.push("feed_length: must be >= 1".into());
        }
        if !self.freshness_halflife.is_finite() || self.freshness_halflife <= 0.0 {
            problems.push(format!(
                "freshness_halflife: must be positive, got {}",
                self.freshness_halflife
            ));
        }
        if self.max_candidate_age.is_nan() || self.max_candidate_age <= 0.0 {
            problems.push(format!(
                "max_candidate_age: must be positive (inf disables the cap), got {}",
                self.max_candidate_age
            ));
        }
        if self.engagement_halflife.is_nan() || self.engagement_halflife <= 0.0 {
            problems.push(format!(
                "engagement_halflife: must be positive (inf disables decay), got {}",
                self.engagement_halflife
            ));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            problems.push(format!("noise_scale: must be >= 0, got {}", self.noise_scale));
        }
        if !self.cold_start_min_signal.is_finite() || self.cold_start_min_signal < 0.0 {
            problems.push(format!(
                "cold_start_min_signal: must be >= 0, got {}",
                self.cold_start_min_signal
            ));
        }
        if self.embedding_dim == 0 {
            problems.push("embedding_dim: must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Content library shape. Sized so five doses always have five distinct
/// search results to target.
#[derive(Debug, Clone)]
pub struct LibraryParams {
    pub sources_per_topic: usize,
    pub posts_per_source: usize,
    /// Fraction of a source's posts drawn from topics other than its
    /// primary one.
    pub topic_diversity: f64,
    /// The background pool gets this many times the per-topic source count.
    pub other_sources: usize,
    /// Posts carry creation ticks in [-span/2, span/2); the feed only sees
    /// posts already created, so fresh content keeps arriving all trial.
    pub created_tick_span: i64,
}

impl Default for LibraryParams {
    fn default() -> Self {
        LibraryParams {
            sources_per_topic: 28,
            posts_per_source: 10,
            topic_diversity: 0.05,
            other_sources: 200,
            created_tick_span: 512,
        }
    }
}

impl LibraryParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.sources_per_topic < 10 {
            problems.push(format!(
                "library.sources_per_topic: must be >= 10, got {}",
                self.sources_per_topic
            ));
        }
        if self.posts_per_source < 5 {
            problems.push(format!(
                "library.posts_per_source: must be >= 5, got {}",
                self.posts_per_source
            ));
        }
        if !(0.0..=1.0).contains(&self.topic_diversity) {
            problems.push(format!(
                "library.topic_diversity: must be in [0,1], got {}",
                self.topic_diversity
            ));
        }
        if self.created_tick_span < 2 {
            problems.push("library.created_tick_span: must be >= 2".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}
