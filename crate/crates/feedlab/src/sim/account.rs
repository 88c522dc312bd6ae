//! Account state and the interaction state machine.
//!
//! Accounts are independent: all state lives here, the library is shared
//! read-only, so sockpuppets can run concurrently without coordination.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::library::{ContentLibrary, SearchResults};
use crate::sim::params::{Interaction, PlatformParams, SearchMode};

/// What an interaction touched, if anything. Sources reachable through
/// targets are what the in-network classification keys on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetRef {
    Post { post_id: String, source_id: String },
    Source { source_id: String },
}

impl TargetRef {
    pub fn source_id(&self) -> &str {
        match self {
            TargetRef::Post { source_id, .. } | TargetRef::Source { source_id } => source_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub tick: u64,
    pub kind: Interaction,
    pub topic: String,
    pub target: Option<TargetRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccountState {
    pub account_id: String,
    pub topic_engagement: BTreeMap<String, f64>,
    pub source_engagement: BTreeMap<String, f64>,
    pub interaction_history: Vec<HistoryEntry>,
    pub clock: u64,
    pub account_seed: u64,
    /// Repetition counters per (topic, interaction), for saturation.
    dose_counts: BTreeMap<(String, Interaction), u64>,
}

impl AccountState {
    /// Fresh account: zero engagement everywhere, empty history.
    /// Field-for-field deterministic for a given (params.rng_seed, seed).
    pub fn create(params: &PlatformParams, account_seed: u64) -> AccountState {
        let _ = params;
        AccountState {
            account_id: format!("a{account_seed:08x}"),
            topic_engagement: BTreeMap::new(),
            source_engagement: BTreeMap::new(),
            interaction_history: Vec::new(),
            clock: 0,
            account_seed,
            dose_counts: BTreeMap::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> AccountState {
        self.account_id = id.into();
        self
    }

    /// Total engagement mass; the cold-start check compares this against
    /// `cold_start_min_signal`.
    pub fn engagement_mass(&self) -> f64 {
        self.topic_engagement.values().sum::<f64>() + self.source_engagement.values().sum::<f64>()
    }

    pub fn engaged_topics(&self) -> impl Iterator<Item = &str> {
        self.topic_engagement
            .iter()
            .filter(|(_, v)| **v > 0.0)
            .map(|(k, _)| k.as_str())
    }

    pub fn engaged_sources(&self) -> impl Iterator<Item = &str> {
        self.source_engagement
            .iter()
            .filter(|(_, v)| **v > 0.0)
            .map(|(k, _)| k.as_str())
    }

    /// Topics touched by any non-control interaction so far.
    pub fn history_topics(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .interaction_history
            .iter()
            .filter(|h| h.kind != Interaction::Control)
            .map(|h| h.topic.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Sources that were the subject of some prior interaction (opened,
    /// liked, joined, followed — including primers). This is the
    /// in-network set.
    pub fn history_sources(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .interaction_history
            .iter()
            .filter_map(|h| h.target.as_ref().map(|t| t.source_id().to_string()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Saturating increment for the next repetition of (topic, kind):
    /// w * s / (s + k - 1) for the k-th identical repetition.
    fn next_increment(&mut self, topic: &str, kind: Interaction, params: &PlatformParams) -> f64 {
        let weight = params.weight(kind);
        let s = params.saturation(kind);
        let count = self
            .dose_counts
            .entry((topic.to_string(), kind))
            .or_insert(0);
        let prior = *count as f64;
        *count += 1;
        let factor = if s.is_infinite() { 1.0 } else { s / (s + prior) };
        weight * factor
    }

    /// Performs one interaction against the library: the switch over
    /// search / open / like / join / follow / control. Advances the clock
    /// by one tick (the between-interaction wait collapses to a tick).
    ///
    /// `iteration` selects the i-th search result (1-based) for targeted
    /// interactions.
    pub fn apply_interaction(
        &mut self,
        interaction: Interaction,
        topic: &str,
        iteration: usize,
        library: &ContentLibrary,
        params: &PlatformParams,
    ) -> Result<()> {
        if iteration < 1 {
            return Err(Error::InvalidIteration { index: iteration, max: 0 });
        }

        // engagement recorded earlier ages by the tick that has elapsed
        // since the previous interaction
        if self.clock > 0 && params.engagement_halflife.is_finite() {
            let factor = (-std::f64::consts::LN_2 / params.engagement_halflife).exp();
            for v in self.topic_engagement.values_mut() {
                *v *= factor;
            }
            for v in self.source_engagement.values_mut() {
                *v *= factor;
            }
        }

        let target = match interaction {
            Interaction::Control => None,
            Interaction::Search => {
                library.search(topic, SearchMode::Content, 5)?;
                None
            }
            Interaction::Open | Interaction::Like => {
                let SearchResults::Posts(posts) = library.search(topic, SearchMode::Content, 5)?
                else {
                    unreachable!("content search returns posts")
                };
                let post = posts.get(iteration - 1).ok_or(Error::InvalidIteration {
                    index: iteration,
                    max: posts.len(),
                })?;
                Some(TargetRef::Post {
                    post_id: post.post_id.clone(),
                    source_id: post.source_id.clone(),
                })
            }
            Interaction::Join | Interaction::Follow => {
                let mode = if interaction == Interaction::Join {
                    SearchMode::Communities
                } else {
                    SearchMode::Users
                };
                let SearchResults::Sources(sources) = library.search(topic, mode, 5)? else {
                    unreachable!("community/user search returns sources")
                };
                let source = sources.get(iteration - 1).ok_or(Error::InvalidIteration {
                    index: iteration,
                    max: sources.len(),
                })?;
                Some(TargetRef::Source { source_id: source.source_id.clone() })
            }
        };

        if interaction != Interaction::Control {
            let increment = self.next_increment(topic, interaction, params);
            *self.topic_engagement.entry(topic.to_string()).or_insert(0.0) += increment;
            if let Some(t) = &target {
                *self
                    .source_engagement
                    .entry(t.source_id().to_string())
                    .or_insert(0.0) += increment;
            }
        }

        self.interaction_history.push(HistoryEntry {
            tick: self.clock,
            kind: interaction,
            topic: topic.to_string(),
            target,
        });
        self.clock += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::library::{ContentLibrary, TopicUniverse};
    use crate::sim::params::LibraryParams;
    use approx::assert_relative_eq;

    fn setup() -> (ContentLibrary, PlatformParams) {
        let universe = TopicUniverse::with_default_primers(vec![
            "NFL".into(),
            "Politics".into(),
            "Fitness".into(),
        ])
        .unwrap();
        let params = PlatformParams::default();
        let lib =
            ContentLibrary::generate(universe, &LibraryParams::default(), &params, 7).unwrap();
        (lib, params)
    }

    #[test]
    fn fresh_account_is_zeroed() {
        let params = PlatformParams::default();
        let a = AccountState::create(&params, 7);
        assert!(a.topic_engagement.is_empty());
        assert!(a.source_engagement.is_empty());
        assert!(a.interaction_history.is_empty());
        assert_eq!(a.clock, 0);
    }

    #[test]
    fn create_is_deterministic() {
        let params = PlatformParams::default();
        assert_eq!(AccountState::create(&params, 7), AccountState::create(&params, 7));
    }

    #[test]
    fn first_like_dose_equals_weight() {
        let (lib, mut params) = setup();
        params.interaction_weights.insert(Interaction::Like, 0.8);
        params.dose_saturation.insert(Interaction::Like, f64::INFINITY);
        let mut a = AccountState::create(&params, 1);
        a.apply_interaction(Interaction::Like, "NFL", 1, &lib, &params).unwrap();
        assert_relative_eq!(a.topic_engagement["NFL"], 0.8);
        let target_source = a.interaction_history[0].target.as_ref().unwrap().source_id();
        assert_relative_eq!(a.source_engagement[target_source], 0.8);
        assert_eq!(a.clock, 1);
    }

    #[test]
    fn control_is_a_noop_with_marker() {
        let (lib, params) = setup();
        let mut a = AccountState::create(&params, 1);
        a.apply_interaction(Interaction::Control, "NFL", 1, &lib, &params).unwrap();
        assert!(a.topic_engagement.is_empty());
        assert!(a.source_engagement.is_empty());
        assert_eq!(a.interaction_history.len(), 1);
        assert_eq!(a.clock, 1);
    }

    // Saturation series summed by hand: five like doses at s = 2 give
    // 0.8 * (2/2 + 2/3 + 2/4 + 2/5 + 2/6). Decay off to isolate the
    // increment rule.
    #[test]
    fn five_doses_follow_saturation_series() {
        let (lib, mut params) = setup();
        params.interaction_weights.insert(Interaction::Like, 0.8);
        params.dose_saturation.insert(Interaction::Like, 2.0);
        params.engagement_halflife = f64::INFINITY;
        let mut a = AccountState::create(&params, 1);
        for i in 1..=5 {
            a.apply_interaction(Interaction::Like, "NFL", i, &lib, &params).unwrap();
        }
        let expected = 0.8 * (2.0 / 2.0 + 2.0 / 3.0 + 2.0 / 4.0 + 2.0 / 5.0 + 2.0 / 6.0);
        assert_relative_eq!(a.topic_engagement["NFL"], expected, epsilon = 1e-12);
    }

    #[test]
    fn engagement_decays_with_halflife() {
        let (lib, mut params) = setup();
        params.interaction_weights.insert(Interaction::Like, 0.8);
        params.dose_saturation.insert(Interaction::Like, f64::INFINITY);
        params.engagement_halflife = 2.0;
        let mut a = AccountState::create(&params, 1);
        a.apply_interaction(Interaction::Like, "NFL", 1, &lib, &params).unwrap();
        assert_relative_eq!(a.topic_engagement["NFL"], 0.8);
        // four control ticks later the signal has halved twice
        for _ in 0..4 {
            a.apply_interaction(Interaction::Control, "-", 1, &lib, &params).unwrap();
        }
        assert_relative_eq!(a.topic_engagement["NFL"], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn per_dose_increments_non_increasing() {
        let (lib, mut params) = setup();
        params.dose_saturation.insert(Interaction::Like, 1.5);
        params.engagement_halflife = f64::INFINITY;
        let mut a = AccountState::create(&params, 1);
        let mut last = f64::INFINITY;
        let mut prev_total = 0.0;
        for i in 1..=5 {
            a.apply_interaction(Interaction::Like, "NFL", i, &lib, &params).unwrap();
            let total = a.topic_engagement["NFL"];
            let inc = total - prev_total;
            assert!(inc <= last + 1e-15, "dose {i}: {inc} > {last}");
            last = inc;
            prev_total = total;
        }
    }

    #[test]
    fn invalid_iteration_rejected() {
        let (lib, params) = setup();
        let mut a = AccountState::create(&params, 1);
        let err = a.apply_interaction(Interaction::Like, "NFL", 0, &lib, &params).unwrap_err();
        assert!(matches!(err, Error::InvalidIteration { .. }));
    }

    #[test]
    fn search_records_topic_but_no_source() {
        let (lib, params) = setup();
        let mut a = AccountState::create(&params, 1);
        a.apply_interaction(Interaction::Search, "Fitness", 1, &lib, &params).unwrap();
        assert_eq!(a.history_topics(), vec!["Fitness".to_string()]);
        assert!(a.history_sources().is_empty());
    }

    #[test]
    fn history_ticks_strictly_increase() {
        let (lib, params) = setup();
        let mut a = AccountState::create(&params, 1);
        for i in 1..=3 {
            a.apply_interaction(Interaction::Open, "NFL", i, &lib, &params).unwrap();
            a.apply_interaction(Interaction::Control, "-", 1, &lib, &params).unwrap();
        }
        for w in a.interaction_history.windows(2) {
            assert!(w[1].tick > w[0].tick);
        }
    }
}
