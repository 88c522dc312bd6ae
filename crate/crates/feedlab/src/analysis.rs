//! End-to-end analysis: composed dataset -> effect tables, influence
//! decomposition, carryover tests, exploration distributions,
//! dose-response curves, and their CSV/plot-data serializations.
//!
//! Units: prevalence- and prominence-based effects are reported in
//! percentage points (raw fractions times 100); embedding effects are
//! Euclidean distances in embedding space. Exploration scores stay in raw
//! prominence-mass units.

use std::collections::BTreeMap;
use std::path::Path;

use crate::behaviors::{
    dose_response_series, exploration_distribution, fit_hill_points, DosePoint,
    DoseResponseCurve, HillFit,
};
use crate::dataset::{ComposedDataset, Measure};
use crate::effects::{
    aggregate_effects, decompose_influence, test_carryover, CarryoverTestResult, InfluenceCell,
    InfluenceSolution, TreatmentEffectEstimate,
};
use crate::error::{Error, Result};
use crate::sim::Interaction;
use crate::stats;
use crate::trial::TreatmentPair;

pub const ANALYSIS_DIR: &str = "analysis";
pub const PLOTS_DIR: &str = "plots";
/// Label used for per-action aggregate rows in dose.csv.
pub const ALL_TOPICS: &str = "(all)";

fn scale_for(measure: Measure) -> f64 {
    match measure {
        Measure::AvgEmbedding => 1.0,
        _ => 100.0,
    }
}

#[derive(Debug, Clone)]
pub struct MeasureTable {
    pub measure: Measure,
    pub estimates: Vec<TreatmentEffectEstimate>,
    pub mu_topic: BTreeMap<String, f64>,
    pub mu_action: BTreeMap<Interaction, f64>,
}

impl MeasureTable {
    pub fn estimate(&self, topic: &str, action: Interaction) -> Option<&TreatmentEffectEstimate> {
        self.estimates
            .iter()
            .find(|e| e.pair.topic == topic && e.pair.action == action)
    }
}

#[derive(Debug, Clone)]
pub struct ExploreSummary {
    pub pair: TreatmentPair,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DoseFit {
    pub curve: DoseResponseCurve,
    pub fit: HillFit,
}

#[derive(Debug)]
pub struct AnalysisResult {
    pub topics: Vec<String>,
    pub interactions: Vec<Interaction>,
    pub alpha: f64,
    /// Effect tables for all five measures, raw units.
    pub tables: Vec<MeasureTable>,
    /// Influence decomposition over topic-prevalence effects, in
    /// percentage points.
    pub influence: InfluenceSolution,
    pub influence_cells: Vec<InfluenceCell>,
    pub carryover: Vec<CarryoverTestResult>,
    pub explore: Vec<ExploreSummary>,
    /// Per-(topic, action) dose-response plus per-action aggregates,
    /// in percentage points.
    pub dose: Vec<DoseFit>,
    pub excluded_puppets: usize,
    pub cluster_k: Option<usize>,
    pub cluster_silhouette: Option<f64>,
}

impl AnalysisResult {
    pub fn table(&self, measure: Measure) -> &MeasureTable {
        self.tables.iter().find(|t| t.measure == measure).expect("all measures computed")
    }
}

/// Runs the full analysis over a composed dataset.
pub fn analyze_composed(dataset: &ComposedDataset, alpha: f64) -> Result<AnalysisResult> {
    let pairs: Vec<TreatmentPair> = dataset
        .interactions
        .iter()
        .flat_map(|&a| dataset.topics.iter().map(move |t| TreatmentPair::new(t.clone(), a)))
        .collect();

    let mut tables = Vec::new();
    for measure in Measure::ALL {
        let mut estimates = Vec::new();
        for pair in &pairs {
            estimates.push(dataset.pair_estimate(pair, measure, alpha)?);
        }
        let (mu_topic, mu_action) =
            aggregate_effects(&estimates, &dataset.topics, &dataset.interactions)?;
        tables.push(MeasureTable { measure, estimates, mu_topic, mu_action });
    }

    // influence decomposition on topic prevalence, percentage points
    let mut influence_cells = dataset.position_cells(Measure::TopicPrevalence, alpha)?;
    for cell in &mut influence_cells {
        cell.mu_hat *= scale_for(Measure::TopicPrevalence);
    }
    let influence = decompose_influence(&influence_cells)?;

    let mut carryover = Vec::new();
    for &action in &dataset.interactions {
        let groups: Vec<Vec<f64>> = dataset
            .carryover_groups(action, Measure::TopicPrevalence)?
            .into_iter()
            .map(|g| g.into_iter().map(|v| v * 100.0).collect())
            .collect();
        carryover.push(test_carryover(action, &groups, alpha)?);
    }

    let mut explore = Vec::new();
    for pair in &pairs {
        explore.push(ExploreSummary {
            pair: pair.clone(),
            scores: exploration_distribution(dataset, pair)?,
        });
    }

    let mut dose = Vec::new();
    for pair in &pairs {
        let mut curve = dose_response_series(dataset, pair, alpha)?;
        for point in &mut curve.responses {
            point.response *= 100.0;
        }
        let fit = fit_hill_points(&curve.responses)?;
        dose.push(DoseFit { curve, fit });
    }
    // per-action aggregates: mean response across topics at each dose
    for &action in &dataset.interactions {
        let per_topic: Vec<&DoseFit> =
            dose.iter().filter(|d| d.curve.pair.action == action).collect();
        let doses = dataset.doses_per_topic;
        let responses: Vec<DosePoint> = (1..=doses)
            .map(|d| {
                let vals: Vec<f64> = per_topic
                    .iter()
                    .map(|df| df.curve.responses[d - 1].response)
                    .collect();
                DosePoint { dose: d, response: stats::mean(&vals) }
            })
            .collect();
        let curve = DoseResponseCurve {
            pair: TreatmentPair::new(ALL_TOPICS, action),
            responses,
        };
        let fit = fit_hill_points(&curve.responses)?;
        dose.push(DoseFit { curve, fit });
    }

    Ok(AnalysisResult {
        topics: dataset.topics.clone(),
        interactions: dataset.interactions.clone(),
        alpha,
        tables,
        influence,
        influence_cells,
        carryover,
        explore,
        dose,
        excluded_puppets: dataset.excluded_puppets,
        cluster_k: dataset.cluster_model.as_ref().map(|m| m.k),
        cluster_silhouette: dataset.cluster_model.as_ref().map(|m| m.silhouette),
    })
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else if x.is_infinite() {
        "-inf".to_string()
    } else {
        "nan".to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| Error::Analysis(format!("creating {}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Analysis(format!("writing {}: {e}", path.display()))
}

fn effect_table_csv(
    path: &Path,
    tables: &[&MeasureTable],
    topics: &[String],
    actions: &[Interaction],
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["topic".to_string(), "measure".to_string(), "mu_topic".to_string()];
    for a in actions {
        header.push(format!("{}_mu", a.name()));
        header.push(format!("{}_p", a.name()));
        header.push(format!("{}_sig", a.name()));
    }
    w.write_record(&header).map_err(csv_err(path))?;

    for topic in topics {
        for table in tables {
            let scale = scale_for(table.measure);
            let mut row = vec![
                topic.clone(),
                table.measure.name().to_string(),
                fmt(table.mu_topic[topic] * scale),
            ];
            for &a in actions {
                let est = table.estimate(topic, a).expect("complete grid");
                row.push(fmt(est.mu_hat * scale));
                row.push(est.p_value.map(fmt).unwrap_or_else(|| "-".to_string()));
                row.push(est.significant.to_string());
            }
            w.write_record(&row).map_err(csv_err(path))?;
        }
    }
    // action-mean block, mirroring the per-action aggregate rows
    for table in tables {
        let scale = scale_for(table.measure);
        let mut row =
            vec!["(action mean)".to_string(), table.measure.name().to_string(), "-".to_string()];
        for &a in actions {
            row.push(fmt(table.mu_action[&a] * scale));
            row.push("-".to_string());
            row.push("-".to_string());
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(format!("flushing {}", path.display()), e))
}

fn sanitize_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

/// Writes every analysis artifact under `<run_dir>/analysis/`.
pub fn write_analysis(run_dir: &Path, result: &AnalysisResult) -> Result<()> {
    let dir = run_dir.join(ANALYSIS_DIR);
    let plots = dir.join(PLOTS_DIR);
    std::fs::create_dir_all(&plots)
        .map_err(|e| Error::io(format!("creating {}", plots.display()), e))?;

    // effects.csv: the three topic measures
    let topic_tables: Vec<&MeasureTable> = Measure::TOPIC_MEASURES
        .iter()
        .map(|m| result.table(*m))
        .collect();
    effect_table_csv(&dir.join("effects.csv"), &topic_tables, &result.topics, &result.interactions)?;

    // effects_sources.csv: the two in-network source measures
    let source_tables: Vec<&MeasureTable> = Measure::SOURCE_MEASURES
        .iter()
        .map(|m| result.table(*m))
        .collect();
    effect_table_csv(
        &dir.join("effects_sources.csv"),
        &source_tables,
        &result.topics,
        &result.interactions,
    )?;

    // influence.csv
    {
        let path = dir.join("influence.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["measure", "factor", "level", "value"]).map_err(csv_err(&path))?;
        let measure = Measure::TopicPrevalence.name();
        for (topic, v) in &result.influence.topic_influence {
            w.write_record([measure, "topic", topic, &fmt(*v)]).map_err(csv_err(&path))?;
        }
        for (action, v) in &result.influence.action_influence {
            w.write_record([measure, "action", action.name(), &fmt(*v)])
                .map_err(csv_err(&path))?;
        }
        for (position, v) in &result.influence.position_influence {
            w.write_record([measure, "position", &format!("seq{position}"), &fmt(*v)])
                .map_err(csv_err(&path))?;
        }
        w.write_record([measure, "fit", "residual_rms", &fmt(result.influence.residual_rms)])
            .map_err(csv_err(&path))?;
        w.write_record([
            measure,
            "fit",
            "clamped_count",
            &result.influence.clamped_count.to_string(),
        ])
        .map_err(csv_err(&path))?;
        w.flush().map_err(|e| Error::io("flushing influence.csv", e))?;
    }

    // carryover.csv
    {
        let path = dir.join("carryover.csv");
        let mut w = csv_writer(&path)?;
        let n_seq = result.topics.len();
        let mut header = vec![
            "interaction".to_string(),
            "f_stat".to_string(),
            "p_value".to_string(),
            "significant".to_string(),
            "max_mean_diff".to_string(),
        ];
        for s in 1..=n_seq {
            header.push(format!("mean_seq{s}"));
        }
        w.write_record(&header).map_err(csv_err(&path))?;
        for r in &result.carryover {
            let mut row = vec![
                r.interaction.name().to_string(),
                fmt(r.f_stat),
                fmt(r.p_value),
                r.significant.to_string(),
                fmt(r.max_mean_diff),
            ];
            for m in &r.group_means {
                row.push(fmt(*m));
            }
            w.write_record(&row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::io("flushing carryover.csv", e))?;
    }

    // explore.csv + plot data
    {
        let path = dir.join("explore.csv");
        let mut w = csv_writer(&path)?;
        w.write_record([
            "topic", "action", "n", "mean", "std", "min", "p25", "median", "p75", "max",
        ])
        .map_err(csv_err(&path))?;
        for summary in &result.explore {
            let s = &summary.scores;
            w.write_record([
                summary.pair.topic.clone(),
                summary.pair.action.name().to_string(),
                s.len().to_string(),
                fmt(stats::mean(s)),
                fmt(stats::std_dev(s)),
                fmt(stats::quantile(s, 0.0)),
                fmt(stats::quantile(s, 0.25)),
                fmt(stats::quantile(s, 0.5)),
                fmt(stats::quantile(s, 0.75)),
                fmt(stats::quantile(s, 1.0)),
            ])
            .map_err(csv_err(&path))?;

            let plot_path = plots.join(format!(
                "explore_{}_{}.tsv",
                summary.pair.action.name(),
                sanitize_name(&summary.pair.topic)
            ));
            let mut sorted = s.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut text = String::from("quantile\tscore\n");
            let denom = (sorted.len().max(2) - 1) as f64;
            for (i, v) in sorted.iter().enumerate() {
                text.push_str(&format!("{}\t{}\n", fmt(i as f64 / denom), fmt(*v)));
            }
            std::fs::write(&plot_path, text)
                .map_err(|e| Error::io(format!("writing {}", plot_path.display()), e))?;
        }
        w.flush().map_err(|e| Error::io("flushing explore.csv", e))?;
    }

    // dose.csv + plot data
    {
        let path = dir.join("dose.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["topic", "action", "dose", "response", "e_max", "ec50", "hill_n", "mse"])
            .map_err(csv_err(&path))?;
        for df in &result.dose {
            for point in &df.curve.responses {
                w.write_record([
                    df.curve.pair.topic.clone(),
                    df.curve.pair.action.name().to_string(),
                    point.dose.to_string(),
                    fmt(point.response),
                    fmt(df.fit.e_max),
                    fmt(df.fit.ec50),
                    fmt(df.fit.hill_n),
                    fmt(df.fit.mse),
                ])
                .map_err(csv_err(&path))?;
            }

            let plot_path = plots.join(format!(
                "dose_{}_{}.tsv",
                df.curve.pair.action.name(),
                sanitize_name(&df.curve.pair.topic)
            ));
            let mut text = String::from("dose\tresponse\tfitted\n");
            for point in &df.curve.responses {
                let d = point.dose as f64;
                let fitted = df.fit.e_max * d.powf(df.fit.hill_n)
                    / (df.fit.ec50.powf(df.fit.hill_n) + d.powf(df.fit.hill_n));
                text.push_str(&format!(
                    "{}\t{}\t{}\n",
                    point.dose,
                    fmt(point.response),
                    fmt(fitted)
                ));
            }
            std::fs::write(&plot_path, text)
                .map_err(|e| Error::io(format!("writing {}", plot_path.display()), e))?;
        }
        w.flush().map_err(|e| Error::io("flushing dose.csv", e))?;
    }

    // run.csv: run-level metadata the summary reports on
    {
        let path = dir.join("run.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["key", "value"]).map_err(csv_err(&path))?;
        let rows = [
            ("alpha".to_string(), fmt(result.alpha)),
            ("excluded_puppets".to_string(), result.excluded_puppets.to_string()),
            (
                "cluster_k".to_string(),
                result.cluster_k.map(|k| k.to_string()).unwrap_or_else(|| "-".to_string()),
            ),
            (
                "cluster_silhouette".to_string(),
                result.cluster_silhouette.map(fmt).unwrap_or_else(|| "-".to_string()),
            ),
            ("influence_clamped".to_string(), result.influence.clamped_count.to_string()),
        ];
        for (k, v) in rows {
            w.write_record([k, v]).map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::io("flushing run.csv", e))?;
    }

    Ok(())
}
