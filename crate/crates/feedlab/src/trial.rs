//! Stratified 3-period, 3-treatment uniform crossover trial.
//!
//! Builds the Latin-square treatment sequences, assigns sockpuppets to
//! (interaction, sequence) subgroups with paired controls, and executes
//! each puppet: primer, then per topic block five doses with a feed
//! snapshot after each, then a washout primer. Control puppets follow the
//! same tick schedule performing no-ops, so their snapshots pair with
//! treatment snapshots tick for tick.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::{
    generate_feed, AccountState, ContentLibrary, FeedPage, Interaction, PlatformParams,
};

/// Doses per primer topic, from the priming routine: three topics, five
/// likes each.
pub const PRIMER_DOSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreatmentPair {
    pub topic: String,
    pub action: Interaction,
}

impl TreatmentPair {
    pub fn new(topic: impl Into<String>, action: Interaction) -> Self {
        TreatmentPair { topic: topic.into(), action }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSequence {
    /// 1-based position in the Latin square.
    pub index: usize,
    pub topics: Vec<String>,
}

/// Cyclic Latin square over the treatment topics: sequence k is the topic
/// list rotated left by k - 1, so each topic occurs once per sequence and
/// once per position.
pub fn generate_latin_squares(topics: &[String]) -> Result<Vec<TopicSequence>> {
    if topics.is_empty() {
        return Err(Error::validation("at least one topic required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for t in topics {
        if !seen.insert(t) {
            return Err(Error::validation(format!("duplicate topic {t:?}")));
        }
    }
    Ok((0..topics.len())
        .map(|k| TopicSequence {
            index: k + 1,
            topics: topics.iter().cycle().skip(k).take(topics.len()).cloned().collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PuppetRole {
    Treatment { sequence: TopicSequence },
    Control,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuppetAssignment {
    pub account_id: String,
    pub interaction: Interaction,
    pub role: PuppetRole,
    /// Index within the interaction's paired cohort; a treatment puppet
    /// and its control share this index and their creation seed.
    pub pair_index: usize,
    pub account_seed: u64,
}

impl PuppetAssignment {
    pub fn is_control(&self) -> bool {
        matches!(self.role, PuppetRole::Control)
    }

    pub fn sequence(&self) -> Option<&TopicSequence> {
        match &self.role {
            PuppetRole::Treatment { sequence } => Some(sequence),
            PuppetRole::Control => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub topics: Vec<String>,
    pub interactions: Vec<Interaction>,
    pub puppets_per_cell: usize,
    pub doses_per_topic: usize,
    pub primer_topics: Vec<String>,
    pub sequences: Vec<TopicSequence>,
    pub assignments: Vec<PuppetAssignment>,
}

/// Observation counts the design yields, derived from the plan shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignCounts {
    pub sockpuppets: usize,
    /// Treatment deltas available per (topic, action) pair.
    pub per_pair: usize,
    /// Treatment deltas available per action.
    pub per_action: usize,
    /// Data points available per topic (every puppet, control included,
    /// contributes exactly one).
    pub per_topic: usize,
}

impl TrialPlan {
    /// Feed snapshots each puppet records: the initial one, then per
    /// topic block a pre-treatment snapshot plus one per dose.
    pub fn snapshots_per_puppet(&self) -> usize {
        1 + self.topics.len() * (self.doses_per_topic + 1)
    }

    pub fn design_counts(&self) -> DesignCounts {
        let m = self.topics.len();
        let n = self.puppets_per_cell;
        let i = self.interactions.len();
        DesignCounts {
            sockpuppets: i * (m * n + n),
            per_pair: m * n,
            per_action: m * m * n,
            per_topic: i * (m * n + n),
        }
    }

    pub fn treatment_pairs(&self) -> Vec<TreatmentPair> {
        let mut pairs = Vec::new();
        for action in &self.interactions {
            for topic in &self.topics {
                pairs.push(TreatmentPair::new(topic.clone(), *action));
            }
        }
        pairs
    }
}

/// Lays out the full crossover plan: per interaction, one treatment
/// subgroup per Latin-square sequence with `n` puppets each, plus `n`
/// paired controls.
pub fn build_trial_plan(
    topics: &[String],
    interactions: &[Interaction],
    n: usize,
    primer_topics: &[String],
    doses_per_topic: usize,
) -> Result<TrialPlan> {
    let mut problems = Vec::new();
    if topics.is_empty() {
        problems.push("at least one treatment topic required".to_string());
    }
    if interactions.is_empty() {
        problems.push("at least one interaction required".to_string());
    }
    if interactions.contains(&Interaction::Control) {
        problems.push("control is implicit; list only treatment interactions".to_string());
    }
    if n < 1 {
        problems.push("puppets per cell must be >= 1".to_string());
    }
    if doses_per_topic < 1 {
        problems.push("doses per topic must be >= 1".to_string());
    }
    if primer_topics.is_empty() {
        problems.push("at least one primer topic required".to_string());
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let sequences = generate_latin_squares(topics)?;
    let mut assignments = Vec::new();
    for (a_idx, &interaction) in interactions.iter().enumerate() {
        for sequence in &sequences {
            for k in 0..n {
                assignments.push(PuppetAssignment {
                    account_id: format!("sp_{}_s{}_k{k:02}", interaction.name(), sequence.index),
                    interaction,
                    role: PuppetRole::Treatment { sequence: sequence.clone() },
                    pair_index: k,
                    account_seed: (a_idx as u64) * 1_000_000
                        + (sequence.index as u64) * 1_000
                        + k as u64,
                });
            }
        }
        for k in 0..n {
            assignments.push(PuppetAssignment {
                account_id: format!("sp_{}_ctl_k{k:02}", interaction.name()),
                interaction,
                role: PuppetRole::Control,
                pair_index: k,
                // the paired control shares the creation seed offset of
                // its first-sequence treatment puppet
                account_seed: (a_idx as u64) * 1_000_000 + 1_000 + k as u64,
            });
        }
    }

    Ok(TrialPlan {
        topics: topics.to_vec(),
        interactions: interactions.to_vec(),
        puppets_per_cell: n,
        doses_per_topic,
        primer_topics: primer_topics.to_vec(),
        sequences,
        assignments,
    })
}

/// One recorded feed. `position` is the 1-based topic block (None for the
/// initial post-primer snapshot); `topic` is None on control puppets.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub position: Option<usize>,
    pub topic: Option<String>,
    pub dose_index: usize,
    pub feed: FeedPage,
}

#[derive(Debug, Clone)]
pub struct ObservationLog {
    pub assignment: PuppetAssignment,
    pub snapshots: Vec<SnapshotRecord>,
    /// Interaction history at the end of the run, for in-network
    /// reconstruction without replaying.
    pub final_history: Vec<crate::sim::HistoryEntry>,
}

/// The standard priming routine: five likes per primer topic. Used at
/// initialization and as washout between topic blocks.
pub fn run_primer(
    account: &mut AccountState,
    library: &ContentLibrary,
    params: &PlatformParams,
    primer_topics: &[String],
) -> Result<()> {
    for topic in primer_topics {
        for i in 1..=PRIMER_DOSES {
            account.apply_interaction(Interaction::Like, topic, i, library, params)?;
        }
    }
    Ok(())
}

/// Runs one sockpuppet to completion: primer, initial snapshot, then per
/// block a pre-treatment snapshot, `doses_per_topic` doses each followed
/// by a snapshot, and a washout primer. Controls advance their clocks in
/// lockstep with no-ops so freshness effects match their pairs.
pub fn run_sockpuppet(
    assignment: &PuppetAssignment,
    plan: &TrialPlan,
    library: &ContentLibrary,
    params: &PlatformParams,
) -> Result<ObservationLog> {
    let mut account = AccountState::create(params, assignment.account_seed)
        .with_id(assignment.account_id.clone());
    let mut snapshots = Vec::with_capacity(plan.snapshots_per_puppet());

    run_primer(&mut account, library, params, &plan.primer_topics)?;
    snapshots.push(SnapshotRecord {
        position: None,
        topic: None,
        dose_index: 0,
        feed: generate_feed(&account, library, params),
    });

    let blocks: Vec<(usize, Option<String>)> = match &assignment.role {
        PuppetRole::Treatment { sequence } => sequence
            .topics
            .iter()
            .enumerate()
            .map(|(i, t)| (i + 1, Some(t.clone())))
            .collect(),
        PuppetRole::Control => (1..=plan.topics.len()).map(|p| (p, None)).collect(),
    };

    for (position, topic) in blocks {
        snapshots.push(SnapshotRecord {
            position: Some(position),
            topic: topic.clone(),
            dose_index: 0,
            feed: generate_feed(&account, library, params),
        });
        for dose in 1..=plan.doses_per_topic {
            match &topic {
                Some(t) => {
                    account.apply_interaction(assignment.interaction, t, dose, library, params)?
                }
                None => {
                    account.apply_interaction(Interaction::Control, "-", 1, library, params)?
                }
            }
            snapshots.push(SnapshotRecord {
                position: Some(position),
                topic: topic.clone(),
                dose_index: dose,
                feed: generate_feed(&account, library, params),
            });
        }
        run_primer(&mut account, library, params, &plan.primer_topics)?;
    }

    debug_assert_eq!(snapshots.len(), plan.snapshots_per_puppet());
    Ok(ObservationLog {
        assignment: assignment.clone(),
        snapshots,
        final_history: account.interaction_history.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct PuppetFailure {
    pub account_id: String,
    pub interaction: Interaction,
    pub pair_index: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct TrialDataset {
    pub logs: Vec<ObservationLog>,
    pub failures: Vec<PuppetFailure>,
}

impl TrialDataset {
    /// Logs usable for analysis after pairwise exclusion: when any puppet
    /// of an (interaction, pair-index) cohort failed, the whole cohort is
    /// dropped so the diff-in-diff stays balanced. Returns the kept logs
    /// and the number excluded.
    pub fn usable_logs(&self) -> (Vec<&ObservationLog>, usize) {
        if self.failures.is_empty() {
            return (self.logs.iter().collect(), 0);
        }
        let bad_cohorts: std::collections::BTreeSet<(Interaction, usize)> =
            self.failures.iter().map(|f| (f.interaction, f.pair_index)).collect();
        let kept: Vec<&ObservationLog> = self
            .logs
            .iter()
            .filter(|l| {
                !bad_cohorts.contains(&(l.assignment.interaction, l.assignment.pair_index))
            })
            .collect();
        let excluded = self.logs.len() - kept.len();
        (kept, excluded)
    }
}

/// Executes every assignment in the plan. Puppets are independent, so
/// results are identical whether run serially or in parallel; the dataset
/// is ordered by account id either way.
pub fn run_trial(
    plan: &TrialPlan,
    library: &ContentLibrary,
    params: &PlatformParams,
    jobs: Option<usize>,
) -> Result<TrialDataset> {
    // every treatment puppet needs its paired control present
    for a in &plan.assignments {
        if !a.is_control() {
            let paired = plan.assignments.iter().any(|c| {
                c.is_control()
                    && c.interaction == a.interaction
                    && c.pair_index == a.pair_index
            });
            if !paired {
                return Err(Error::validation(format!(
                    "treatment puppet {} has no paired control",
                    a.account_id
                )));
            }
        }
    }

    type PuppetResult = (PuppetAssignment, Result<ObservationLog>);
    let run_all = || -> Vec<PuppetResult> {
        plan.assignments
            .par_iter()
            .map(|a| (a.clone(), run_sockpuppet(a, plan, library, params)))
            .collect()
    };

    let results = match jobs {
        Some(1) => plan
            .assignments
            .iter()
            .map(|a| (a.clone(), run_sockpuppet(a, plan, library, params)))
            .collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Analysis(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for (assignment, result) in results {
        match result {
            Ok(log) => logs.push(log),
            Err(e) => failures.push(PuppetFailure {
                account_id: assignment.account_id,
                interaction: assignment.interaction,
                pair_index: assignment.pair_index,
                message: e.to_string(),
            }),
        }
    }
    logs.sort_by(|a, b| a.assignment.account_id.cmp(&b.assignment.account_id));
    failures.sort_by(|a, b| a.account_id.cmp(&b.account_id));
    Ok(TrialDataset { logs, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LibraryParams, TopicUniverse, COOKING_LABEL, DEFAULT_PRIMER_TOPICS};

    fn topics() -> Vec<String> {
        vec!["Chiefs".into(), "Elections".into(), "Fitness".into()]
    }

    fn primer_topics() -> Vec<String> {
        DEFAULT_PRIMER_TOPICS.iter().map(|s| s.to_string()).collect()
    }

    fn setup() -> (ContentLibrary, PlatformParams) {
        let universe = TopicUniverse::with_default_primers(topics()).unwrap();
        let params = PlatformParams::default();
        let lib =
            ContentLibrary::generate(universe, &LibraryParams::default(), &params, 42).unwrap();
        (lib, params)
    }

    #[test]
    fn latin_square_matches_cyclic_rotation() {
        let seqs = generate_latin_squares(&topics()).unwrap();
        assert_eq!(seqs[0].topics, vec!["Chiefs", "Elections", "Fitness"]);
        assert_eq!(seqs[1].topics, vec!["Elections", "Fitness", "Chiefs"]);
        assert_eq!(seqs[2].topics, vec!["Fitness", "Chiefs", "Elections"]);
    }

    #[test]
    fn latin_square_singleton() {
        let seqs = generate_latin_squares(&["A".to_string()]).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].topics, vec!["A"]);
    }

    // Brute-force uniqueness scan over rows and columns of a 4x4 square.
    #[test]
    fn latin_square_row_column_uniqueness() {
        let topics: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let seqs = generate_latin_squares(&topics).unwrap();
        assert_eq!(seqs.len(), 4);
        for seq in &seqs {
            let mut row = seq.topics.clone();
            row.sort();
            assert_eq!(row, topics, "row {} not a permutation", seq.index);
        }
        for pos in 0..4 {
            let mut col: Vec<String> = seqs.iter().map(|s| s.topics[pos].clone()).collect();
            col.sort();
            assert_eq!(col, topics, "column {pos} not a permutation");
        }
    }

    #[test]
    fn latin_square_rejects_duplicates() {
        assert!(generate_latin_squares(&["A".to_string(), "A".to_string()]).is_err());
    }

    #[test]
    fn default_plan_uses_eighty_sockpuppets() {
        let plan = build_trial_plan(
            &topics(),
            &Interaction::ALL_TREATMENTS,
            4,
            &primer_topics(),
            5,
        )
        .unwrap();
        let counts = plan.design_counts();
        assert_eq!(counts.sockpuppets, 80);
        assert_eq!(plan.assignments.len(), 80);
        assert_eq!(counts.per_pair, 12);
        assert_eq!(counts.per_action, 36);
        assert_eq!(counts.per_topic, 80);
    }

    #[test]
    fn minimal_plan_is_two_puppets() {
        let plan = build_trial_plan(
            &["A".to_string()],
            &[Interaction::Like],
            1,
            &primer_topics(),
            5,
        )
        .unwrap();
        assert_eq!(plan.assignments.len(), 2);
        assert_eq!(plan.design_counts().sockpuppets, 2);
    }

    #[test]
    fn zero_puppets_rejected() {
        assert!(build_trial_plan(&topics(), &[Interaction::Like], 0, &primer_topics(), 5).is_err());
    }

    #[test]
    fn primer_performs_fifteen_cooking_likes() {
        let (lib, params) = setup();
        let mut account = AccountState::create(&params, 3);
        run_primer(&mut account, &lib, &params, &primer_topics()).unwrap();
        assert_eq!(account.interaction_history.len(), 15);
        for entry in &account.interaction_history {
            assert_eq!(entry.kind, Interaction::Like);
            assert_eq!(lib.universe.label_for(&entry.topic), COOKING_LABEL);
            assert!(entry.target.is_some());
        }
    }

    #[test]
    fn post_primer_feed_is_cooking_dominated() {
        let (lib, params) = setup();
        let mut account = AccountState::create(&params, 3);
        run_primer(&mut account, &lib, &params, &primer_topics()).unwrap();
        let feed = generate_feed(&account, &lib, &params);
        assert!(!feed.is_empty());
        let mut by_label: std::collections::BTreeMap<String, usize> = Default::default();
        for e in &feed.entries {
            *by_label.entry(lib.universe.label_for(&e.post.true_topic)).or_insert(0) += 1;
        }
        let cooking = by_label.get(COOKING_LABEL).copied().unwrap_or(0);
        for (label, count) in &by_label {
            if label != COOKING_LABEL {
                assert!(cooking > *count, "{label} ({count}) >= Cooking ({cooking})");
            }
        }
    }

    #[test]
    fn primer_twice_doubles_history() {
        let (lib, params) = setup();
        let mut account = AccountState::create(&params, 3);
        run_primer(&mut account, &lib, &params, &primer_topics()).unwrap();
        run_primer(&mut account, &lib, &params, &primer_topics()).unwrap();
        assert_eq!(account.interaction_history.len(), 30);
    }

    fn small_plan() -> TrialPlan {
        build_trial_plan(&topics(), &[Interaction::Like], 2, &primer_topics(), 5).unwrap()
    }

    #[test]
    fn sockpuppet_log_shape_matches_design() {
        let (lib, params) = setup();
        let plan = small_plan();
        let treatment = plan.assignments.iter().find(|a| !a.is_control()).unwrap();
        let log = run_sockpuppet(treatment, &plan, &lib, &params).unwrap();
        // 1 initial + 3 blocks * (1 + 5 doses)
        assert_eq!(log.snapshots.len(), plan.snapshots_per_puppet());
        assert_eq!(log.snapshots.len(), 19);
    }

    #[test]
    fn control_shares_tick_schedule() {
        let (lib, params) = setup();
        let plan = small_plan();
        let treatment = plan
            .assignments
            .iter()
            .find(|a| !a.is_control() && a.pair_index == 0)
            .unwrap();
        let control = plan
            .assignments
            .iter()
            .find(|a| a.is_control() && a.pair_index == 0)
            .unwrap();
        let t_log = run_sockpuppet(treatment, &plan, &lib, &params).unwrap();
        let c_log = run_sockpuppet(control, &plan, &lib, &params).unwrap();
        let t_ticks: Vec<u64> = t_log.snapshots.iter().map(|s| s.feed.tick).collect();
        let c_ticks: Vec<u64> = c_log.snapshots.iter().map(|s| s.feed.tick).collect();
        assert_eq!(t_ticks, c_ticks);
        // control performed no treatment interactions
        assert!(c_log
            .final_history
            .iter()
            .all(|h| h.kind == Interaction::Like || h.kind == Interaction::Control));
    }

    #[test]
    fn sockpuppet_runs_are_deterministic() {
        let (lib, params) = setup();
        let plan = small_plan();
        let a = &plan.assignments[0];
        let log1 = run_sockpuppet(a, &plan, &lib, &params).unwrap();
        let log2 = run_sockpuppet(a, &plan, &lib, &params).unwrap();
        for (s1, s2) in log1.snapshots.iter().zip(&log2.snapshots) {
            assert_eq!(s1.feed.tick, s2.feed.tick);
            let ids1: Vec<&str> = s1.feed.entries.iter().map(|e| e.post.post_id.as_str()).collect();
            let ids2: Vec<&str> = s2.feed.entries.iter().map(|e| e.post.post_id.as_str()).collect();
            assert_eq!(ids1, ids2);
        }
    }

    #[test]
    fn trial_serial_and_parallel_agree() {
        let (lib, params) = setup();
        let plan = small_plan();
        let serial = run_trial(&plan, &lib, &params, Some(1)).unwrap();
        let parallel = run_trial(&plan, &lib, &params, Some(4)).unwrap();
        assert_eq!(serial.logs.len(), parallel.logs.len());
        assert!(serial.failures.is_empty());
        for (a, b) in serial.logs.iter().zip(&parallel.logs) {
            assert_eq!(a.assignment.account_id, b.assignment.account_id);
            for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
                let ids_a: Vec<&str> =
                    sa.feed.entries.iter().map(|e| e.post.post_id.as_str()).collect();
                let ids_b: Vec<&str> =
                    sb.feed.entries.iter().map(|e| e.post.post_id.as_str()).collect();
                assert_eq!(ids_a, ids_b);
            }
        }
    }

    #[test]
    fn empty_plan_runs_vacuously() {
        let (lib, params) = setup();
        let plan = TrialPlan {
            topics: topics(),
            interactions: vec![],
            puppets_per_cell: 0,
            doses_per_topic: 5,
            primer_topics: primer_topics(),
            sequences: vec![],
            assignments: vec![],
        };
        let dataset = run_trial(&plan, &lib, &params, Some(1)).unwrap();
        assert!(dataset.logs.is_empty());
        assert!(dataset.failures.is_empty());
    }

    #[test]
    fn unpaired_treatment_is_rejected() {
        let (lib, params) = setup();
        let mut plan = small_plan();
        plan.assignments.retain(|a| !a.is_control());
        assert!(run_trial(&plan, &lib, &params, Some(1)).is_err());
    }
}
