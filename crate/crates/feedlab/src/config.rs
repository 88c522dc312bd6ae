//! Experiment configuration.
//!
//! Flat key-value sections with explicit headers (TOML). Parsing is not
//! fail-fast: every violation in the file is collected and reported
//! together. Unknown sections and keys are errors, which catches typos
//! before an 80-puppet run burns time. All randomness hangs off
//! `master_seed`; there is no wall-clock seeding anywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::composition::{EmbeddingProvider, ExternalServiceProvider, TopicAnchorProvider};
use crate::error::{Error, Result};
use crate::sim::{
    ContentLibrary, Interaction, LibraryParams, PlatformParams, TopicUniverse,
    DEFAULT_PRIMER_TOPICS,
};
use crate::trial::{build_trial_plan, TrialPlan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderChoice {
    TopicAnchor,
    /// External embedding service; excluded from tests. When `fallback`
    /// is set the pipeline drops back to the topic-anchor provider
    /// instead of failing.
    External { endpoint: Option<String>, fallback: bool },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topics: Vec<String>,
    pub interactions: Vec<Interaction>,
    pub puppets_per_cell: usize,
    pub doses_per_topic: usize,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub alpha: f64,
    pub embedding_provider: ProviderChoice,
    pub primer_topics: Vec<String>,
    pub platform: PlatformParams,
    pub library: LibraryParams,
}

impl ExperimentConfig {
    /// Paper-scale defaults: requires only topics, interactions, n, seed.
    pub fn template(topics: Vec<String>, master_seed: u64) -> ExperimentConfig {
        let mut platform = PlatformParams::default();
        platform.rng_seed = master_seed;
        ExperimentConfig {
            topics,
            interactions: Interaction::ALL_TREATMENTS.to_vec(),
            puppets_per_cell: 4,
            doses_per_topic: 5,
            master_seed,
            output_dir: None,
            alpha: 0.05,
            embedding_provider: ProviderChoice::TopicAnchor,
            primer_topics: DEFAULT_PRIMER_TOPICS.iter().map(|s| s.to_string()).collect(),
            platform,
            library: LibraryParams::default(),
        }
    }

    pub fn universe(&self) -> Result<TopicUniverse> {
        TopicUniverse::new(self.topics.clone(), self.primer_topics.clone())
    }

    pub fn build_plan(&self) -> Result<TrialPlan> {
        build_trial_plan(
            &self.topics,
            &self.interactions,
            self.puppets_per_cell,
            &self.primer_topics,
            self.doses_per_topic,
        )
    }

    pub fn build_library(&self) -> Result<ContentLibrary> {
        ContentLibrary::generate(self.universe()?, &self.library, &self.platform, self.master_seed)
    }

    /// Embedding provider per config; an external provider with fallback
    /// enabled resolves to the deterministic default.
    pub fn provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        let universe = self.universe()?;
        match &self.embedding_provider {
            ProviderChoice::TopicAnchor => Ok(Box::new(TopicAnchorProvider::new(
                &universe.all_topics(),
                self.platform.embedding_dim,
            ))),
            ProviderChoice::External { endpoint, fallback } => {
                if *fallback {
                    Ok(Box::new(TopicAnchorProvider::new(
                        &universe.all_topics(),
                        self.platform.embedding_dim,
                    )))
                } else {
                    Ok(Box::new(ExternalServiceProvider {
                        endpoint: endpoint.clone(),
                        dim: self.platform.embedding_dim,
                    }))
                }
            }
        }
    }

    pub fn with_seed(mut self, seed: u64) -> ExperimentConfig {
        self.master_seed = seed;
        self.platform.rng_seed = seed;
        self
    }

    pub fn parse_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        ExperimentConfig::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<ExperimentConfig> {
        let table: toml::Table =
            text.parse().map_err(|e| Error::validation(format!("config is not valid TOML: {e}")))?;
        Parser::new(table).finish()
    }

    /// Canonical rendering: fixed key order, resolved defaults. The
    /// manifest hash is taken over exactly this text, and parsing it back
    /// reproduces the config.
    pub fn to_canonical_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let quote = |s: &str| format!("{:?}", s);
        let list = |items: &[String]| {
            items.iter().map(|s| quote(s)).collect::<Vec<_>>().join(", ")
        };
        writeln!(out, "[experiment]").unwrap();
        writeln!(out, "topics = [{}]", list(&self.topics)).unwrap();
        writeln!(
            out,
            "interactions = [{}]",
            self.interactions
                .iter()
                .map(|i| quote(i.name()))
                .collect::<Vec<_>>()
                .join(", ")
        )
        .unwrap();
        writeln!(out, "puppets_per_cell = {}", self.puppets_per_cell).unwrap();
        writeln!(out, "doses_per_topic = {}", self.doses_per_topic).unwrap();
        writeln!(out, "master_seed = {}", self.master_seed).unwrap();
        if let Some(dir) = &self.output_dir {
            writeln!(out, "output_dir = {}", quote(&dir.display().to_string())).unwrap();
        }
        writeln!(out, "alpha = {}", self.alpha).unwrap();
        writeln!(out, "primer_topics = [{}]", list(&self.primer_topics)).unwrap();
        match &self.embedding_provider {
            ProviderChoice::TopicAnchor => {
                writeln!(out, "embedding_provider = \"topic-anchor\"").unwrap()
            }
            ProviderChoice::External { endpoint, fallback } => {
                writeln!(out, "embedding_provider = \"external\"").unwrap();
                if let Some(url) = endpoint {
                    writeln!(out, "embedding_endpoint = {}", quote(url)).unwrap();
                }
                writeln!(out, "embedding_fallback = {fallback}").unwrap();
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "[platform]").unwrap();
        writeln!(out, "explore_quota = {}", self.platform.explore_quota).unwrap();
        writeln!(out, "feed_length = {}", self.platform.feed_length).unwrap();
        writeln!(out, "freshness_halflife = {}", self.platform.freshness_halflife).unwrap();
        if self.platform.max_candidate_age.is_finite() {
            writeln!(out, "max_candidate_age = {}", self.platform.max_candidate_age).unwrap();
        } else {
            writeln!(out, "max_candidate_age = \"inf\"").unwrap();
        }
        if self.platform.engagement_halflife.is_finite() {
            writeln!(out, "engagement_halflife = {}", self.platform.engagement_halflife).unwrap();
        } else {
            writeln!(out, "engagement_halflife = \"inf\"").unwrap();
        }
        writeln!(out, "noise_scale = {}", self.platform.noise_scale).unwrap();
        writeln!(out, "cold_start_min_signal = {}", self.platform.cold_start_min_signal).unwrap();
        writeln!(out, "beta_source = {}", self.platform.beta_source).unwrap();
        writeln!(out, "embedding_dim = {}", self.platform.embedding_dim).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "[platform.interaction_weights]").unwrap();
        for action in Interaction::ALL_TREATMENTS {
            writeln!(out, "{} = {}", action.name(), self.platform.weight(action)).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "[platform.dose_saturation]").unwrap();
        for action in Interaction::ALL_TREATMENTS {
            let s = self.platform.saturation(action);
            if s.is_infinite() {
                writeln!(out, "{} = inf", action.name()).unwrap();
            } else {
                writeln!(out, "{} = {}", action.name(), s).unwrap();
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "[library]").unwrap();
        writeln!(out, "sources_per_topic = {}", self.library.sources_per_topic).unwrap();
        writeln!(out, "posts_per_source = {}", self.library.posts_per_source).unwrap();
        writeln!(out, "topic_diversity = {}", self.library.topic_diversity).unwrap();
        writeln!(out, "other_sources = {}", self.library.other_sources).unwrap();
        writeln!(out, "created_tick_span = {}", self.library.created_tick_span).unwrap();
        out
    }
}

/// Section-walking parser that records every violation.
struct Parser {
    table: toml::Table,
    problems: Vec<String>,
}

impl Parser {
    fn new(table: toml::Table) -> Self {
        Parser { table, problems: Vec::new() }
    }

    fn finish(mut self) -> Result<ExperimentConfig> {
        let mut experiment = self.take_section("experiment");
        let mut platform_tbl = self.take_section("platform");
        let weights_tbl = platform_tbl
            .remove("interaction_weights")
            .map(|v| self.as_table(v, "platform.interaction_weights"))
            .unwrap_or_default();
        let saturation_tbl = platform_tbl
            .remove("dose_saturation")
            .map(|v| self.as_table(v, "platform.dose_saturation"))
            .unwrap_or_default();
        let mut library_tbl = self.take_section("library");

        for section in self.table.keys() {
            self.problems.push(format!("unknown section [{section}]"));
        }

        let topics = self.req_str_list(&mut experiment, "experiment", "topics");
        let interactions_raw = self.req_str_list(&mut experiment, "experiment", "interactions");
        let puppets_per_cell = self.req_usize(&mut experiment, "experiment", "puppets_per_cell");
        let master_seed = self.req_seed(&mut experiment, "experiment", "master_seed");
        let doses_per_topic =
            self.opt_usize(&mut experiment, "experiment", "doses_per_topic").unwrap_or(5);
        let alpha = self.opt_f64(&mut experiment, "experiment", "alpha").unwrap_or(0.05);
        let output_dir = self
            .opt_str(&mut experiment, "experiment", "output_dir")
            .map(PathBuf::from);
        let primer_topics = self
            .opt_str_list(&mut experiment, "experiment", "primer_topics")
            .unwrap_or_else(|| DEFAULT_PRIMER_TOPICS.iter().map(|s| s.to_string()).collect());
        let provider_name = self
            .opt_str(&mut experiment, "experiment", "embedding_provider")
            .unwrap_or_else(|| "topic-anchor".to_string());
        let embedding_endpoint = self.opt_str(&mut experiment, "experiment", "embedding_endpoint");
        let embedding_fallback = self
            .opt_bool(&mut experiment, "experiment", "embedding_fallback")
            .unwrap_or(false);
        self.reject_unknown(&experiment, "experiment");

        let embedding_provider = match provider_name.as_str() {
            "topic-anchor" => ProviderChoice::TopicAnchor,
            "external" => ProviderChoice::External {
                endpoint: embedding_endpoint,
                fallback: embedding_fallback,
            },
            other => {
                self.problems.push(format!(
                    "experiment.embedding_provider: unknown provider {other:?} \
                     (expected \"topic-anchor\" or \"external\")"
                ));
                ProviderChoice::TopicAnchor
            }
        };

        let mut platform = PlatformParams::default();
        platform.rng_seed = master_seed.unwrap_or(0);
        if let Some(v) = self.opt_f64(&mut platform_tbl, "platform", "explore_quota") {
            platform.explore_quota = v;
        }
        if let Some(v) = self.opt_usize(&mut platform_tbl, "platform", "feed_length") {
            platform.feed_length = v;
        }
        if let Some(v) = self.opt_f64(&mut platform_tbl, "platform", "freshness_halflife") {
            platform.freshness_halflife = v;
        }
        if let Some(v) = self.opt_f64_or_inf(&mut platform_tbl, "platform", "max_candidate_age") {
            platform.max_candidate_age = v;
        }
        if let Some(v) = self.opt_f64_or_inf(&mut platform_tbl, "platform", "engagement_halflife")
        {
            platform.engagement_halflife = v;
        }
        if let Some(v) = self.opt_f64(&mut platform_tbl, "platform", "noise_scale") {
            platform.noise_scale = v;
        }
        if let Some(v) = self.opt_f64(&mut platform_tbl, "platform", "cold_start_min_signal") {
            platform.cold_start_min_signal = v;
        }
        if let Some(v) = self.opt_f64(&mut platform_tbl, "platform", "beta_source") {
            platform.beta_source = v;
        }
        if let Some(v) = self.opt_usize(&mut platform_tbl, "platform", "embedding_dim") {
            platform.embedding_dim = v;
        }
        self.reject_unknown(&platform_tbl, "platform");

        self.fill_interaction_map(
            weights_tbl,
            "platform.interaction_weights",
            &mut platform.interaction_weights,
            false,
        );
        self.fill_interaction_map(
            saturation_tbl,
            "platform.dose_saturation",
            &mut platform.dose_saturation,
            true,
        );

        let mut library = LibraryParams::default();
        if let Some(v) = self.opt_usize(&mut library_tbl, "library", "sources_per_topic") {
            library.sources_per_topic = v;
        }
        if let Some(v) = self.opt_usize(&mut library_tbl, "library", "posts_per_source") {
            library.posts_per_source = v;
        }
        if let Some(v) = self.opt_f64(&mut library_tbl, "library", "topic_diversity") {
            library.topic_diversity = v;
        }
        if let Some(v) = self.opt_usize(&mut library_tbl, "library", "other_sources") {
            library.other_sources = v;
        }
        if let Some(v) = self.opt_usize(&mut library_tbl, "library", "created_tick_span") {
            library.created_tick_span = v as i64;
        }
        self.reject_unknown(&library_tbl, "library");

        // semantic checks on what parsed
        let mut interactions = Vec::new();
        if let Some(names) = &interactions_raw {
            for name in names {
                match Interaction::parse(name) {
                    Ok(Interaction::Control) => self
                        .problems
                        .push("experiment.interactions: control is implicit".to_string()),
                    Ok(i) => {
                        if interactions.contains(&i) {
                            self.problems
                                .push(format!("experiment.interactions: duplicate {name:?}"));
                        } else {
                            interactions.push(i);
                        }
                    }
                    Err(_) => self
                        .problems
                        .push(format!("experiment.interactions: unknown interaction {name:?}")),
                }
            }
        }
        if let Some(n) = puppets_per_cell {
            if n < 1 {
                self.problems.push("experiment.puppets_per_cell: must be >= 1".to_string());
            }
        }
        if doses_per_topic < 1 {
            self.problems.push("experiment.doses_per_topic: must be >= 1".to_string());
        }
        if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
            self.problems.push(format!("experiment.alpha: must be in (0,1), got {alpha}"));
        }
        if let Some(ts) = &topics {
            if let Err(Error::Validation(v)) =
                TopicUniverse::new(ts.clone(), primer_topics.clone())
            {
                self.problems.extend(v.into_iter().map(|p| format!("experiment.topics: {p}")));
            }
            let universe_size = ts.len() + primer_topics.len() + 1;
            if platform.embedding_dim < universe_size {
                self.problems.push(format!(
                    "platform.embedding_dim: {} is smaller than the topic universe ({universe_size})",
                    platform.embedding_dim
                ));
            }
        }
        if let Err(Error::Validation(v)) = platform.validate() {
            self.problems.extend(v.into_iter().map(|p| format!("platform.{p}")));
        }
        if let Err(Error::Validation(v)) = library.validate() {
            self.problems.extend(v);
        }

        if !self.problems.is_empty() {
            return Err(Error::Validation(self.problems));
        }

        Ok(ExperimentConfig {
            topics: topics.unwrap(),
            interactions,
            puppets_per_cell: puppets_per_cell.unwrap(),
            doses_per_topic,
            master_seed: master_seed.unwrap(),
            output_dir,
            alpha,
            embedding_provider,
            primer_topics,
            platform,
            library,
        })
    }

    fn take_section(&mut self, name: &str) -> BTreeMap<String, Value> {
        match self.table.remove(name) {
            Some(Value::Table(t)) => t.into_iter().collect(),
            Some(_) => {
                self.problems.push(format!("[{name}] must be a section"));
                BTreeMap::new()
            }
            None => {
                if name == "experiment" {
                    self.problems.push("missing required section [experiment]".to_string());
                }
                BTreeMap::new()
            }
        }
    }

    fn as_table(&mut self, v: Value, ctx: &str) -> BTreeMap<String, Value> {
        match v {
            Value::Table(t) => t.into_iter().collect(),
            _ => {
                self.problems.push(format!("{ctx} must be a table"));
                BTreeMap::new()
            }
        }
    }

    fn reject_unknown(&mut self, section: &BTreeMap<String, Value>, name: &str) {
        for key in section.keys() {
            self.problems.push(format!("unknown key {name}.{key}"));
        }
    }

    fn fill_interaction_map(
        &mut self,
        table: BTreeMap<String, Value>,
        ctx: &str,
        map: &mut BTreeMap<Interaction, f64>,
        allow_inf: bool,
    ) {
        for (key, value) in table {
            let Ok(interaction) = Interaction::parse(&key) else {
                self.problems.push(format!("{ctx}: unknown interaction {key:?}"));
                continue;
            };
            let parsed = match &value {
                Value::Float(f) => Some(*f),
                Value::Integer(i) => Some(*i as f64),
                Value::String(s) if allow_inf && (s == "inf" || s == "infinity") => {
                    Some(f64::INFINITY)
                }
                _ => None,
            };
            match parsed {
                Some(v) => {
                    map.insert(interaction, v);
                }
                None => self.problems.push(format!("{ctx}.{key}: expected a number")),
            }
        }
    }

    fn req_str_list(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<Vec<String>> {
        match self.opt_str_list(section, sec, key) {
            Some(v) => Some(v),
            None => {
                self.problems.push(format!("missing required key {sec}.{key}"));
                None
            }
        }
    }

    fn opt_str_list(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<Vec<String>> {
        let value = section.remove(key)?;
        match value {
            Value::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        Value::String(s) => out.push(s),
                        other => {
                            self.problems.push(format!(
                                "{sec}.{key}: expected strings, found {}",
                                other.type_str()
                            ));
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.problems
                    .push(format!("{sec}.{key}: expected an array, found {}", other.type_str()));
                Some(Vec::new())
            }
        }
    }

    fn req_usize(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<usize> {
        match self.opt_usize(section, sec, key) {
            Some(v) => Some(v),
            None => {
                self.problems.push(format!("missing required key {sec}.{key}"));
                None
            }
        }
    }

    fn req_seed(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<u64> {
        match section.remove(key) {
            Some(Value::Integer(i)) if i >= 0 => Some(i as u64),
            Some(Value::Integer(i)) => {
                self.problems.push(format!("{sec}.{key}: seed must be >= 0, got {i}"));
                None
            }
            Some(other) => {
                self.problems
                    .push(format!("{sec}.{key}: expected an integer, found {}", other.type_str()));
                None
            }
            None => {
                self.problems.push(format!("missing required key {sec}.{key}"));
                None
            }
        }
    }

    fn opt_usize(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<usize> {
        match section.remove(key)? {
            Value::Integer(i) if i >= 0 => Some(i as usize),
            Value::Integer(i) => {
                self.problems.push(format!("{sec}.{key}: must be >= 0, got {i}"));
                None
            }
            other => {
                self.problems
                    .push(format!("{sec}.{key}: expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn opt_f64(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<f64> {
        match section.remove(key)? {
            Value::Float(f) => Some(f),
            Value::Integer(i) => Some(i as f64),
            other => {
                self.problems
                    .push(format!("{sec}.{key}: expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn opt_f64_or_inf(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<f64> {
        match section.remove(key)? {
            Value::Float(f) => Some(f),
            Value::Integer(i) => Some(i as f64),
            Value::String(s) if s == "inf" || s == "infinity" => Some(f64::INFINITY),
            other => {
                self.problems.push(format!(
                    "{sec}.{key}: expected a number or \"inf\", found {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn opt_str(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<String> {
        match section.remove(key)? {
            Value::String(s) => Some(s),
            other => {
                self.problems
                    .push(format!("{sec}.{key}: expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn opt_bool(
        &mut self,
        section: &mut BTreeMap<String, Value>,
        sec: &str,
        key: &str,
    ) -> Option<bool> {
        match section.remove(key)? {
            Value::Boolean(b) => Some(b),
            other => {
                self.problems
                    .push(format!("{sec}.{key}: expected a boolean, found {}", other.type_str()));
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
topics = ["Chiefs", "Elections", "Fitness"]
interactions = ["search", "open", "like", "join", "follow"]
puppets_per_cell = 4
master_seed = 42
"#;

    #[test]
    fn minimal_config_yields_eighty_puppet_plan() {
        let config = ExperimentConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(config.doses_per_topic, 5);
        assert_eq!(config.master_seed, 42);
        let plan = config.build_plan().unwrap();
        assert_eq!(plan.design_counts().sockpuppets, 80);
    }

    #[test]
    fn missing_seed_is_named() {
        let text = MINIMAL.replace("master_seed = 42\n", "");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("experiment.master_seed"), "{err}");
    }

    #[test]
    fn out_of_range_quota_is_a_range_violation() {
        let text = format!("{MINIMAL}\n[platform]\nexplore_quota = 1.5\n");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("explore_quota"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[platform]\nexplor_quota = 0.1\n");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown key platform.explor_quota"), "{err}");
    }

    #[test]
    fn violations_are_collected_not_fail_fast() {
        let text = r#"
[experiment]
topics = ["A", "A"]
interactions = ["like", "zap"]
puppets_per_cell = 0
master_seed = -3

[platform]
explore_quota = 2.0
"#;
        let err = ExperimentConfig::parse_str(text).unwrap_err();
        let text = err.to_string();
        for needle in ["duplicate", "zap", "puppets_per_cell", "master_seed", "explore_quota"] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }

    #[test]
    fn zero_puppets_rejected() {
        let text = MINIMAL.replace("puppets_per_cell = 4", "puppets_per_cell = 0");
        assert!(ExperimentConfig::parse_str(&text).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let config = ExperimentConfig::parse_str(MINIMAL).unwrap();
        let canonical = config.to_canonical_string();
        let reparsed = ExperimentConfig::parse_str(&canonical).unwrap();
        assert_eq!(canonical, reparsed.to_canonical_string());
    }

    #[test]
    fn weight_overrides_apply() {
        let text = format!(
            "{MINIMAL}\n[platform.interaction_weights]\nlike = 0.9\n\n[platform.dose_saturation]\nlike = \"inf\"\n"
        );
        let config = ExperimentConfig::parse_str(&text).unwrap();
        assert_eq!(config.platform.weight(Interaction::Like), 0.9);
        assert!(config.platform.saturation(Interaction::Like).is_infinite());
    }

    #[test]
    fn external_provider_with_fallback_resolves_to_default() {
        let text = format!(
            "{MINIMAL}embedding_provider = \"external\"\nembedding_fallback = true\n"
        );
        let config = ExperimentConfig::parse_str(&text).unwrap();
        let provider = config.provider().unwrap();
        assert_eq!(provider.name(), "topic-anchor");
    }
}
