//! Platform-behavior metrics: exploration prominence, per-treatment
//! exploration distributions, dose-response series, and Hill-equation
//! curve fitting.

use crate::dataset::{ComposedDataset, Measure};
use crate::effects::observed_effect;
use crate::error::{Error, Result};
use crate::sim::FeedPage;
use crate::trial::TreatmentPair;

/// Rank-weighted mass of feed content unrelated to the account's past:
/// posts whose topic label is absent from `history_topics` and whose
/// source is out-of-network. Bounded by the feed's total prominence mass
/// H(|F|) / |F|.
pub fn explore_prominence(
    feed: &FeedPage,
    label_of: impl Fn(&crate::sim::PostRecord) -> Result<String>,
    history_topics: &std::collections::BTreeSet<String>,
    history_sources: &std::collections::BTreeSet<String>,
) -> Result<f64> {
    if feed.is_empty() {
        return Err(Error::Analysis("cannot score an empty feed".into()));
    }
    let n = feed.len() as f64;
    let mut total = 0.0;
    for entry in &feed.entries {
        let label = label_of(&entry.post)?;
        if !history_topics.contains(&label) && !history_sources.contains(&entry.post.source_id) {
            total += 1.0 / (entry.rank as f64 * n);
        }
    }
    Ok(total)
}

/// Exploration scores for every feed whose interaction history includes
/// the treatment: for a puppet whose sequence holds the treatment topic
/// at position p, the block-end feeds of positions p..m all qualify.
/// Control puppets never qualify (their histories lack the treatment).
pub fn exploration_distribution(
    dataset: &ComposedDataset,
    pair: &TreatmentPair,
) -> Result<Vec<f64>> {
    let doses = dataset.doses_per_topic;
    let mut scores = Vec::new();
    for puppet in dataset.treatment_puppets(pair.action) {
        let Some(start) = puppet.position_of(&pair.topic) else {
            continue;
        };
        let blocks = puppet.sequence_topics.as_ref().map(|t| t.len()).unwrap_or(0);
        for position in start..=blocks {
            let snap = puppet.snapshot(position, doses).ok_or_else(|| {
                Error::Analysis(format!(
                    "{}: missing block-end snapshot at position {position}",
                    puppet.account_id
                ))
            })?;
            scores.push(explore_prominence(
                &snap.feed,
                |p| {
                    dataset.post_labels.get(&p.post_id).cloned().ok_or_else(|| {
                        Error::Analysis(format!("post {} has no label", p.post_id))
                    })
                },
                &snap.history_topics,
                &snap.history_sources,
            )?);
        }
    }
    if scores.is_empty() {
        return Err(Error::Analysis(format!(
            "treatment ({}, {}) is absent from the dataset",
            pair.topic, pair.action
        )));
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy)]
pub struct DosePoint {
    pub dose: usize,
    pub response: f64,
}

/// Response to successive identical doses: the diff-in-diff estimate on
/// the topic-prominence delta from the pre-treatment snapshot through
/// each dose.
#[derive(Debug, Clone)]
pub struct DoseResponseCurve {
    pub pair: TreatmentPair,
    pub responses: Vec<DosePoint>,
}

impl DoseResponseCurve {
    pub fn response_values(&self) -> Vec<f64> {
        self.responses.iter().map(|p| p.response).collect()
    }
}

/// Dose-response series for one treatment pair on topic prominence,
/// measured against paired controls at the same ticks.
pub fn dose_response_series(
    dataset: &ComposedDataset,
    pair: &TreatmentPair,
    alpha: f64,
) -> Result<DoseResponseCurve> {
    let mut responses = Vec::with_capacity(dataset.doses_per_topic);
    for dose in 1..=dataset.doses_per_topic {
        let (t, c) = dataset.paired_deltas(pair, dose, Measure::TopicProminence)?;
        let est = observed_effect(pair.clone(), &t, &c, alpha)?;
        responses.push(DosePoint { dose, response: est.mu_hat });
    }
    Ok(DoseResponseCurve { pair: pair.clone(), responses })
}

#[derive(Debug, Clone, Copy)]
pub struct HillFit {
    /// Asymptotic effect; sign-unconstrained (platforms can respond
    /// negatively to repeated doses).
    pub e_max: f64,
    pub ec50: f64,
    pub hill_n: f64,
    pub mse: f64,
}

fn hill(d: f64, e_max: f64, ec50: f64, n: f64) -> f64 {
    let dn = d.powf(n);
    e_max * dn / (ec50.powf(n) + dn)
}

/// Conditional least squares: with (ec50, n) fixed the model is linear in
/// e_max, so the optimum is closed-form.
fn profiled_sse(points: &[DosePoint], ec50: f64, n: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for p in points {
        let g = {
            let dn = (p.dose as f64).powf(n);
            dn / (ec50.powf(n) + dn)
        };
        num += p.response * g;
        den += g * g;
    }
    let e_max = if den > 0.0 { num / den } else { 0.0 };
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p.response - hill(p.dose as f64, e_max, ec50, n);
            r * r
        })
        .sum();
    (e_max, sse)
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Nelder-Mead over (ln ec50, ln n); log coordinates keep both positive.
fn nelder_mead(
    points: &[DosePoint],
    start: [f64; 2],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> [f64; 2] {
    let f = |x: &[f64; 2]| profiled_sse(points, x[0].exp(), x[1].exp()).1;
    let mut simplex: Vec<([f64; 2], f64)> = vec![
        (start, f(&start)),
        ([start[0] + step, start[1]], f(&[start[0] + step, start[1]])),
        ([start[0], start[1] + step], f(&[start[0], start[1] + step])),
    ];
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[2].1 - simplex[0].1).abs();
        if spread <= tol * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let best = simplex[0].0;
        let good = simplex[1].0;
        let worst = simplex[2].0;
        let centroid = [(best[0] + good[0]) / 2.0, (best[1] + good[1]) / 2.0];
        let reflect = [2.0 * centroid[0] - worst[0], 2.0 * centroid[1] - worst[1]];
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = [
                centroid[0] + 2.0 * (reflect[0] - centroid[0]),
                centroid[1] + 2.0 * (reflect[1] - centroid[1]),
            ];
            let fe = f(&expand);
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let contract = [
                centroid[0] + 0.5 * (worst[0] - centroid[0]),
                centroid[1] + 0.5 * (worst[1] - centroid[1]),
            ];
            let fc = f(&contract);
            if fc < simplex[2].1 {
                simplex[2] = (contract, fc);
            } else {
                // shrink toward best
                for i in 1..3 {
                    let shrunk = [
                        best[0] + 0.5 * (simplex[i].0[0] - best[0]),
                        best[1] + 0.5 * (simplex[i].0[1] - best[1]),
                    ];
                    simplex[i] = (shrunk, f(&shrunk));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].0
}

/// Least-squares Hill fit: coarse log-spaced grid over
/// ec50 in [0.1, 20] and n in [0.25, 4] with e_max profiled out, then
/// local derivative-free refinement.
pub fn fit_hill(curve: &DoseResponseCurve) -> Result<HillFit> {
    fit_hill_points(&curve.responses)
}

pub fn fit_hill_points(points: &[DosePoint]) -> Result<HillFit> {
    if points.len() < 3 {
        return Err(Error::validation("Hill fit needs at least three dose points"));
    }
    if points.iter().any(|p| !p.response.is_finite()) {
        return Err(Error::validation("Hill fit requires finite responses"));
    }
    if points.iter().all(|p| p.response == 0.0) {
        return Ok(HillFit { e_max: 0.0, ec50: 1.0, hill_n: 1.0, mse: 0.0 });
    }

    let mut best = (f64::INFINITY, 1.0f64, 1.0f64);
    for ec50 in log_space(0.1, 20.0, 25) {
        for n in log_space(0.25, 4.0, 17) {
            let (_, sse) = profiled_sse(points, ec50, n);
            if sse < best.0 {
                best = (sse, ec50, n);
            }
        }
    }

    // progressive refinement: each restart shrinks the initial simplex
    // around the previous optimum
    let mut x = [best.1.ln(), best.2.ln()];
    for step in [0.25, 0.01, 1e-4] {
        x = nelder_mead(points, x, step, 1e-12, 800);
    }
    let (ec50, n) = (x[0].exp(), x[1].exp());
    let (e_max, sse) = profiled_sse(points, ec50, n);
    Ok(HillFit { e_max, ec50, hill_n: n, mse: sse / points.len() as f64 })
}
