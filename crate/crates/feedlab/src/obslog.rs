//! Observation-log files and the run manifest.
//!
//! One UTF-8 tab-separated file per puppet, header line, one line per
//! (snapshot, feed entry), columns exactly:
//!
//!   account_id  group  interaction  seq_index  topic  dose_index
//!   snapshot_tick  rank  post_id  source_id  true_topic  text
//!
//! Snapshots appear in recording order; a rank-1 line starts a new
//! snapshot. The topic column is "-" on the initial snapshot and on
//! control puppets' block snapshots (their block position follows from
//! dose-index resets in file order).
//!
//! The manifest records the config hash, seed, counts, and per-puppet
//! assignment metadata; analysis refuses a directory whose config no
//! longer matches the manifest hash. Everything round-trips byte for
//! byte: write -> read -> write is identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use toml::Value;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sim::{FeedEntry, FeedPage, Interaction, PostRecord};
use crate::trial::{
    ObservationLog, PuppetAssignment, PuppetFailure, PuppetRole, SnapshotRecord, TrialDataset,
    TrialPlan,
};

pub const LOG_HEADER: &str = "account_id\tgroup\tinteraction\tseq_index\ttopic\tdose_index\tsnapshot_tick\trank\tpost_id\tsource_id\ttrue_topic\ttext";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "config.toml";
pub const LOG_DIR: &str = "logs";
pub const FORMAT_VERSION: u64 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

fn sanitize(field: &str) -> Result<&str> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(Error::validation(format!(
            "field {field:?} contains tab or newline; cannot serialize"
        )));
    }
    Ok(field)
}

/// Renders one puppet's log file.
pub fn render_log(log: &ObservationLog) -> Result<String> {
    let a = &log.assignment;
    let group = if a.is_control() { "control" } else { "treatment" };
    let seq_index = a.sequence().map(|s| s.index).unwrap_or(0);
    let mut out = String::with_capacity(64 * 1024);
    out.push_str(LOG_HEADER);
    out.push('\n');
    for snap in &log.snapshots {
        let topic = snap.topic.as_deref().unwrap_or("-");
        for entry in &snap.feed.entries {
            let post = &entry.post;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                sanitize(&a.account_id)?,
                group,
                a.interaction.name(),
                seq_index,
                sanitize(topic)?,
                snap.dose_index,
                snap.feed.tick,
                entry.rank,
                sanitize(&post.post_id)?,
                sanitize(&post.source_id)?,
                sanitize(&post.true_topic)?,
                sanitize(&post.text)?,
            ));
        }
    }
    Ok(out)
}

/// Parses one log file back into an ObservationLog. Snapshot boundaries
/// are rank-1 lines; block positions are rebuilt from dose-index resets.
pub fn parse_log(path_label: &str, text: &str, plan: &TrialPlan) -> Result<ObservationLog> {
    let corrupt = |line: usize, message: String| Error::Corrupt {
        path: path_label.to_string(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(corrupt(1, "empty file".into()));
    };
    if header != LOG_HEADER {
        return Err(corrupt(1, format!("bad header: {header:?}")));
    }

    struct RawSnapshot {
        topic: String,
        dose_index: usize,
        tick: u64,
        entries: Vec<FeedEntry>,
    }

    let mut meta: Option<(String, String, Interaction, usize)> = None;
    let mut snapshots: Vec<RawSnapshot> = Vec::new();

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 12 {
            return Err(corrupt(line_no, format!("expected 12 columns, found {}", fields.len())));
        }
        let parse_num = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| corrupt(line_no, format!("bad {what}: {s:?}")))
        };
        let account_id = fields[0].to_string();
        let group = fields[1].to_string();
        let interaction = Interaction::parse(fields[2])
            .map_err(|_| corrupt(line_no, format!("bad interaction: {:?}", fields[2])))?;
        let seq_index = parse_num(fields[3], "seq_index")? as usize;
        let topic = fields[4].to_string();
        let dose_index = parse_num(fields[5], "dose_index")? as usize;
        let tick = parse_num(fields[6], "snapshot_tick")?;
        let rank = parse_num(fields[7], "rank")? as usize;

        match &meta {
            None => meta = Some((account_id, group, interaction, seq_index)),
            Some((a, g, i, s)) => {
                if *a != account_id || *g != group || *i != interaction || *s != seq_index {
                    return Err(corrupt(line_no, "puppet metadata changed mid-file".into()));
                }
            }
        }

        let post = Arc::new(PostRecord {
            post_id: fields[8].to_string(),
            source_id: fields[9].to_string(),
            true_topic: fields[10].to_string(),
            text: fields[11].to_string(),
            // regenerated by the dataset builder; not stored in logs
            embedding: Vec::new(),
            created_tick: 0,
            popularity: 0.0,
        });

        if rank == 1 {
            snapshots.push(RawSnapshot {
                topic: topic.clone(),
                dose_index,
                tick,
                entries: Vec::new(),
            });
        }
        let Some(current) = snapshots.last_mut() else {
            return Err(corrupt(line_no, "first entry line must have rank 1".into()));
        };
        if current.entries.len() + 1 != rank
            || current.topic != topic
            || current.dose_index != dose_index
            || current.tick != tick
        {
            return Err(corrupt(line_no, "snapshot lines out of order".into()));
        }
        current.entries.push(FeedEntry { rank, post });
    }

    let Some((account_id, group, interaction, seq_index)) = meta else {
        return Err(corrupt(2, "no entry lines".into()));
    };

    let role = if group == "control" {
        PuppetRole::Control
    } else {
        let sequence = plan
            .sequences
            .iter()
            .find(|s| s.index == seq_index)
            .ok_or_else(|| corrupt(2, format!("seq_index {seq_index} not in plan")))?;
        PuppetRole::Treatment { sequence: sequence.clone() }
    };

    // block positions from dose-index resets, in file order
    let mut records = Vec::with_capacity(snapshots.len());
    let mut position = 0usize;
    for (i, raw) in snapshots.into_iter().enumerate() {
        let pos = if i == 0 {
            if raw.dose_index != 0 {
                return Err(corrupt(2, "first snapshot must be dose 0".into()));
            }
            None
        } else {
            if raw.dose_index == 0 {
                position += 1;
            }
            Some(position)
        };
        let topic = if raw.topic == "-" { None } else { Some(raw.topic.clone()) };
        records.push(SnapshotRecord {
            position: pos,
            topic,
            dose_index: raw.dose_index,
            feed: FeedPage { account_id: account_id.clone(), tick: raw.tick, entries: raw.entries },
        });
    }

    if records.len() != plan.snapshots_per_puppet() {
        return Err(Error::Corrupt {
            path: path_label.to_string(),
            line: 0,
            message: format!(
                "{} snapshots, plan expects {}",
                records.len(),
                plan.snapshots_per_puppet()
            ),
        });
    }

    let pair_index = pair_index_from_id(&account_id).ok_or_else(|| Error::Corrupt {
        path: path_label.to_string(),
        line: 0,
        message: format!("cannot recover pair index from account id {account_id:?}"),
    })?;

    Ok(ObservationLog {
        assignment: PuppetAssignment {
            account_id,
            interaction,
            role,
            pair_index,
            account_seed: 0,
        },
        snapshots: records,
        final_history: Vec::new(),
    })
}

fn pair_index_from_id(account_id: &str) -> Option<usize> {
    account_id.rsplit('_').next()?.strip_prefix('k')?.parse().ok()
}

#[derive(Debug, Clone)]
pub struct ManifestPuppet {
    pub account_id: String,
    pub file: String,
    pub interaction: Interaction,
    pub group: String,
    pub seq_index: usize,
    pub pair_index: usize,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub format_version: u64,
    pub config_sha256: String,
    pub master_seed: u64,
    pub puppet_count: usize,
    pub snapshots_per_puppet: usize,
    pub puppets: Vec<ManifestPuppet>,
    pub failures: Vec<PuppetFailure>,
}

impl Manifest {
    fn render(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "[manifest]").unwrap();
        writeln!(out, "format_version = {}", self.format_version).unwrap();
        writeln!(out, "config_sha256 = \"{}\"", self.config_sha256).unwrap();
        writeln!(out, "master_seed = {}", self.master_seed).unwrap();
        writeln!(out, "puppet_count = {}", self.puppet_count).unwrap();
        writeln!(out, "snapshots_per_puppet = {}", self.snapshots_per_puppet).unwrap();
        for p in &self.puppets {
            writeln!(out).unwrap();
            writeln!(out, "[[puppet]]").unwrap();
            writeln!(out, "account_id = {:?}", p.account_id).unwrap();
            writeln!(out, "file = {:?}", p.file).unwrap();
            writeln!(out, "interaction = \"{}\"", p.interaction.name()).unwrap();
            writeln!(out, "group = {:?}", p.group).unwrap();
            writeln!(out, "seq_index = {}", p.seq_index).unwrap();
            writeln!(out, "pair_index = {}", p.pair_index).unwrap();
        }
        for f in &self.failures {
            writeln!(out).unwrap();
            writeln!(out, "[[failure]]").unwrap();
            writeln!(out, "account_id = {:?}", f.account_id).unwrap();
            writeln!(out, "interaction = \"{}\"", f.interaction.name()).unwrap();
            writeln!(out, "pair_index = {}", f.pair_index).unwrap();
            writeln!(out, "message = {:?}", f.message).unwrap();
        }
        out
    }

    fn parse(text: &str) -> Result<Manifest> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Manifest(format!("manifest is not valid TOML: {e}")))?;
        let m = table
            .get("manifest")
            .and_then(|v| v.as_table())
            .ok_or_else(|| Error::Manifest("missing [manifest] section".into()))?;
        let get_int = |t: &toml::Table, key: &str| -> Result<u64> {
            t.get(key)
                .and_then(|v| v.as_integer())
                .map(|v| v as u64)
                .ok_or_else(|| Error::Manifest(format!("missing integer {key}")))
        };
        let get_str = |t: &toml::Table, key: &str| -> Result<String> {
            t.get(key)
                .and_then(|v| v.as_str())
                .map(String::from)
                .ok_or_else(|| Error::Manifest(format!("missing string {key}")))
        };

        let mut puppets = Vec::new();
        if let Some(Value::Array(items)) = table.get("puppet").map(|v| v.clone()) {
            for item in items {
                let t = item
                    .as_table()
                    .ok_or_else(|| Error::Manifest("puppet entry must be a table".into()))?;
                puppets.push(ManifestPuppet {
                    account_id: get_str(t, "account_id")?,
                    file: get_str(t, "file")?,
                    interaction: Interaction::parse(&get_str(t, "interaction")?)?,
                    group: get_str(t, "group")?,
                    seq_index: get_int(t, "seq_index")? as usize,
                    pair_index: get_int(t, "pair_index")? as usize,
                });
            }
        }
        let mut failures = Vec::new();
        if let Some(Value::Array(items)) = table.get("failure").map(|v| v.clone()) {
            for item in items {
                let t = item
                    .as_table()
                    .ok_or_else(|| Error::Manifest("failure entry must be a table".into()))?;
                failures.push(PuppetFailure {
                    account_id: get_str(t, "account_id")?,
                    interaction: Interaction::parse(&get_str(t, "interaction")?)?,
                    pair_index: get_int(t, "pair_index")? as usize,
                    message: get_str(t, "message")?,
                });
            }
        }

        Ok(Manifest {
            format_version: get_int(m, "format_version")?,
            config_sha256: get_str(m, "config_sha256")?,
            master_seed: get_int(m, "master_seed")?,
            puppet_count: get_int(m, "puppet_count")? as usize,
            snapshots_per_puppet: get_int(m, "snapshots_per_puppet")? as usize,
            puppets,
            failures,
        })
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes a full run directory: canonical config, one log per puppet,
/// and the manifest. Re-running with the same config and seed produces
/// byte-identical files.
pub fn write_run(
    out_dir: &Path,
    config: &ExperimentConfig,
    plan: &TrialPlan,
    dataset: &TrialDataset,
) -> Result<()> {
    let logs_dir = out_dir.join(LOG_DIR);
    std::fs::create_dir_all(&logs_dir)
        .map_err(|e| Error::io(format!("creating {}", logs_dir.display()), e))?;

    let config_text = config.to_canonical_string();
    write_atomic(&out_dir.join(CONFIG_FILE), &config_text)?;

    let mut puppets = Vec::new();
    for log in &dataset.logs {
        let a = &log.assignment;
        let file = format!("{LOG_DIR}/{}.tsv", a.account_id);
        write_atomic(&out_dir.join(&file), &render_log(log)?)?;
        puppets.push(ManifestPuppet {
            account_id: a.account_id.clone(),
            file,
            interaction: a.interaction,
            group: if a.is_control() { "control".into() } else { "treatment".into() },
            seq_index: a.sequence().map(|s| s.index).unwrap_or(0),
            pair_index: a.pair_index,
        });
    }
    puppets.sort_by(|a, b| a.account_id.cmp(&b.account_id));

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config_sha256: sha256_hex(config_text.as_bytes()),
        master_seed: config.master_seed,
        puppet_count: dataset.logs.len(),
        snapshots_per_puppet: plan.snapshots_per_puppet(),
        puppets,
        failures: dataset.failures.clone(),
    };
    write_atomic(&out_dir.join(MANIFEST_FILE), &manifest.render())
}

#[derive(Debug)]
pub struct LoadedRun {
    pub config: ExperimentConfig,
    pub plan: TrialPlan,
    pub manifest: Manifest,
    pub dataset: TrialDataset,
}

/// Loads and verifies a run directory: manifest present, config hash
/// matching, every listed log parseable and the right shape.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::Manifest(format!("no manifest at {}", manifest_path.display())));
    }
    let manifest_text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::io(format!("reading {}", manifest_path.display()), e))?;
    let manifest = Manifest::parse(&manifest_text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Manifest(format!(
            "format version {} unsupported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    let config_path = dir.join(CONFIG_FILE);
    let config_text = std::fs::read_to_string(&config_path)
        .map_err(|e| Error::io(format!("reading {}", config_path.display()), e))?;
    let actual_hash = sha256_hex(config_text.as_bytes());
    if actual_hash != manifest.config_sha256 {
        return Err(Error::Manifest(format!(
            "config hash {actual_hash} does not match manifest {}",
            manifest.config_sha256
        )));
    }
    let config = ExperimentConfig::parse_str(&config_text)?;
    if config.master_seed != manifest.master_seed {
        return Err(Error::Manifest("seed in config and manifest disagree".into()));
    }
    let plan = config.build_plan()?;

    if manifest.puppet_count != manifest.puppets.len() {
        return Err(Error::Manifest(format!(
            "manifest lists {} puppets but declares {}",
            manifest.puppets.len(),
            manifest.puppet_count
        )));
    }

    let mut logs = Vec::with_capacity(manifest.puppets.len());
    for p in &manifest.puppets {
        let path = dir.join(&p.file);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let log = parse_log(&p.file, &text, &plan)?;
        if log.assignment.account_id != p.account_id {
            return Err(Error::Manifest(format!(
                "{}: account id {} does not match manifest entry {}",
                p.file, log.assignment.account_id, p.account_id
            )));
        }
        if log.assignment.pair_index != p.pair_index {
            return Err(Error::Manifest(format!("{}: pair index mismatch", p.file)));
        }
        logs.push(log);
    }
    logs.sort_by(|a, b| a.assignment.account_id.cmp(&b.assignment.account_id));

    let failures = manifest.failures.clone();
    Ok(LoadedRun { config, plan, manifest, dataset: TrialDataset { logs, failures } })
}

/// Per-file SHA-256 digests of a run directory's logs and manifest, keyed
/// by relative path. Two runs with the same seed must compare equal.
pub fn run_digests(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for name in [MANIFEST_FILE, CONFIG_FILE] {
        let bytes = std::fs::read(dir.join(name))
            .map_err(|e| Error::io(format!("reading {name}"), e))?;
        out.insert(name.to_string(), sha256_hex(&bytes));
    }
    let logs_dir = dir.join(LOG_DIR);
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&logs_dir)
        .map_err(|e| Error::io(format!("reading {}", logs_dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let bytes =
            std::fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let rel = format!("{LOG_DIR}/{}", path.file_name().unwrap().to_string_lossy());
        out.insert(rel, sha256_hex(&bytes));
    }
    Ok(out)
}
