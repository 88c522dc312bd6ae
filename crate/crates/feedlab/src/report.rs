//! Human-readable summary over an analysis directory.
//!
//! Reads the emitted CSVs back rather than in-memory results, so the
//! summary reflects exactly what was persisted. Missing artifacts are
//! called out in a gaps section instead of failing the whole report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

type Rows = Vec<BTreeMap<String, String>>;

fn read_csv(path: &Path) -> Result<Rows> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Analysis(format!("reading {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Analysis(format!("reading {}: {e}", path.display())))?
        .clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Analysis(format!("reading {}: {e}", path.display())))?;
        rows.push(
            headers
                .iter()
                .zip(record.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect(),
        );
    }
    Ok(rows)
}

fn best_row<'a>(rows: &'a Rows, factor: &str) -> Option<&'a BTreeMap<String, String>> {
    rows.iter()
        .filter(|r| r.get("factor").map(String::as_str) == Some(factor))
        .max_by(|a, b| {
            let va: f64 = a.get("value").and_then(|v| v.parse().ok()).unwrap_or(f64::MIN);
            let vb: f64 = b.get("value").and_then(|v| v.parse().ok()).unwrap_or(f64::MIN);
            va.total_cmp(&vb)
        })
}

/// Renders the summary text for an analysis directory. Identical inputs
/// produce identical summaries.
pub fn render_summary(analysis_dir: &Path) -> Result<String> {
    if !analysis_dir.exists() {
        return Err(Error::Analysis(format!(
            "analysis directory {} does not exist",
            analysis_dir.display()
        )));
    }
    let mut out = String::new();
    let mut gaps: Vec<String> = Vec::new();

    writeln!(out, "feedlab analysis summary").unwrap();
    writeln!(out, "========================").unwrap();

    // run metadata
    match read_csv(&analysis_dir.join("run.csv")) {
        Ok(rows) => {
            let get = |key: &str| {
                rows.iter()
                    .find(|r| r.get("key").map(String::as_str) == Some(key))
                    .and_then(|r| r.get("value").cloned())
                    .unwrap_or_else(|| "-".to_string())
            };
            writeln!(out).unwrap();
            writeln!(out, "run:").unwrap();
            writeln!(out, "  alpha: {}", get("alpha")).unwrap();
            writeln!(out, "  excluded puppets: {}", get("excluded_puppets")).unwrap();
            writeln!(
                out,
                "  post clusters: k={} (silhouette {})",
                get("cluster_k"),
                get("cluster_silhouette")
            )
            .unwrap();
        }
        Err(_) => gaps.push("run metadata: unavailable (run.csv missing)".into()),
    }

    // influence ranking
    match read_csv(&analysis_dir.join("influence.csv")) {
        Ok(rows) => {
            writeln!(out).unwrap();
            writeln!(out, "influence (topic prevalence):").unwrap();
            for (factor, label) in
                [("action", "most influential action"), ("topic", "most influential topic"), ("position", "most influential position")]
            {
                match best_row(&rows, factor) {
                    Some(r) => writeln!(
                        out,
                        "  {label}: {} ({})",
                        r.get("level").map(String::as_str).unwrap_or("-"),
                        r.get("value").map(String::as_str).unwrap_or("-")
                    )
                    .unwrap(),
                    None => writeln!(out, "  {label}: -").unwrap(),
                }
            }
            let fit = |level: &str| {
                rows.iter()
                    .find(|r| {
                        r.get("factor").map(String::as_str) == Some("fit")
                            && r.get("level").map(String::as_str) == Some(level)
                    })
                    .and_then(|r| r.get("value").cloned())
                    .unwrap_or_else(|| "-".to_string())
            };
            writeln!(out, "  clamped cells: {}", fit("clamped_count")).unwrap();
            writeln!(out, "  fit residual (rms, log domain): {}", fit("residual_rms")).unwrap();
        }
        Err(_) => gaps.push("influence ranking: unavailable (influence.csv missing)".into()),
    }

    // significant effect cells
    match read_csv(&analysis_dir.join("effects.csv")) {
        Ok(rows) => {
            writeln!(out).unwrap();
            writeln!(out, "significant effects:").unwrap();
            let mut any = false;
            for row in &rows {
                let topic = row.get("topic").cloned().unwrap_or_default();
                if topic == "(action mean)" {
                    continue;
                }
                let measure = row.get("measure").cloned().unwrap_or_default();
                let mut actions: Vec<&String> = row
                    .keys()
                    .filter(|k| k.ends_with("_sig"))
                    .collect();
                actions.sort();
                for key in actions {
                    if row[key] == "true" {
                        let action = key.trim_end_matches("_sig");
                        let mu = row
                            .get(&format!("{action}_mu"))
                            .map(String::as_str)
                            .unwrap_or("-");
                        writeln!(out, "  {measure}: ({topic}, {action}) -> {mu}").unwrap();
                        any = true;
                    }
                }
            }
            if !any {
                writeln!(out, "  none at this alpha").unwrap();
            }
        }
        Err(_) => gaps.push("effect table: unavailable (effects.csv missing)".into()),
    }

    // carryover
    match read_csv(&analysis_dir.join("carryover.csv")) {
        Ok(rows) => {
            writeln!(out).unwrap();
            writeln!(out, "carryover (per-sequence effect sums):").unwrap();
            let flagged: Vec<String> = rows
                .iter()
                .filter(|r| r.get("significant").map(String::as_str) == Some("true"))
                .map(|r| {
                    format!(
                        "{} (p = {})",
                        r.get("interaction").map(String::as_str).unwrap_or("-"),
                        r.get("p_value").map(String::as_str).unwrap_or("-")
                    )
                })
                .collect();
            if flagged.is_empty() {
                writeln!(out, "  no significant sequence differences").unwrap();
            } else {
                for f in flagged {
                    writeln!(out, "  significant: {f}").unwrap();
                }
            }
        }
        Err(_) => gaps.push("carryover tests: unavailable (carryover.csv missing)".into()),
    }

    // dose-response
    match read_csv(&analysis_dir.join("dose.csv")) {
        Ok(rows) => {
            let mut curves: BTreeMap<(String, String), f64> = BTreeMap::new();
            for row in &rows {
                let key = (
                    row.get("action").cloned().unwrap_or_default(),
                    row.get("topic").cloned().unwrap_or_default(),
                );
                let e_max: f64 =
                    row.get("e_max").and_then(|v| v.parse().ok()).unwrap_or(0.0);
                curves.insert(key, e_max);
            }
            writeln!(out).unwrap();
            writeln!(out, "dose-response: {} fitted curves", curves.len()).unwrap();
            if let Some(((action, topic), e_max)) = curves
                .iter()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(k, v)| (k.clone(), *v))
            {
                writeln!(out, "  largest |E_max|: {action} on {topic} ({e_max:.6})").unwrap();
            }
        }
        Err(_) => gaps.push("dose-response: unavailable (dose.csv missing)".into()),
    }

    // exploration
    match read_csv(&analysis_dir.join("explore.csv")) {
        Ok(rows) => {
            let mut by_action: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for row in &rows {
                if let (Some(action), Some(mean)) = (row.get("action"), row.get("mean")) {
                    if let Ok(v) = mean.parse::<f64>() {
                        by_action.entry(action.clone()).or_default().push(v);
                    }
                }
            }
            writeln!(out).unwrap();
            writeln!(out, "exploration prominence (mean score by action):").unwrap();
            for (action, vals) in &by_action {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                writeln!(out, "  {action}: {mean:.6}").unwrap();
            }
        }
        Err(_) => gaps.push("exploration distributions: unavailable (explore.csv missing)".into()),
    }

    writeln!(out).unwrap();
    if gaps.is_empty() {
        writeln!(out, "gaps: none").unwrap();
    } else {
        writeln!(out, "gaps:").unwrap();
        for gap in gaps {
            writeln!(out, "  {gap}").unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_directory_is_an_error() {
        assert!(render_summary(Path::new("/nonexistent/feedlab-analysis")).is_err());
    }

    #[test]
    fn empty_directory_reports_all_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let text = render_summary(dir.path()).unwrap();
        assert!(text.contains("gaps:"), "{text}");
        assert!(text.contains("dose-response: unavailable"), "{text}");
        assert!(text.contains("influence ranking: unavailable"), "{text}");
    }
}
