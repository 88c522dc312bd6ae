//! Treatment-effect estimation over crossover-trial data.
//!
//! The observed effect for a treatment pair is the paired double-sum
//! difference-in-differences, which collapses algebraically to
//! mean(treatment deltas) - mean(control deltas); both are computed and
//! cross-checked. Aggregates over topics and actions are unweighted row
//! and column means. A forward model of nuisance structure (period,
//! sequence, carryover terms) supports calibration of the estimator, an
//! ANOVA over per-sequence effect sums tests for differential carryover,
//! and a log-domain least-squares decomposition splits observed effects
//! into multiplicative topic / action / position influences.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sim::Interaction;
use crate::stats;
use crate::trial::{TreatmentPair, TrialPlan};

/// Observed effects below this are clamped before the log-domain solve.
pub const INFLUENCE_CLAMP_EPSILON: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct TreatmentEffectEstimate {
    pub pair: TreatmentPair,
    /// Paired diff-in-diff estimate.
    pub mu_hat: f64,
    pub treatment_deltas: Vec<f64>,
    pub control_deltas: Vec<f64>,
    /// Welch two-sample p-value; None when undefined (single-sample).
    pub p_value: Option<f64>,
    pub significant: bool,
}

/// Difference-in-differences estimate for one treatment pair.
///
/// Evaluates the full (1/n^2) double sum over treatment x control delta
/// pairs and verifies it equals the difference of sample means;
/// significance comes from Welch's unequal-variance t-test at `alpha`.
pub fn observed_effect(
    pair: TreatmentPair,
    treatment_deltas: &[f64],
    control_deltas: &[f64],
    alpha: f64,
) -> Result<TreatmentEffectEstimate> {
    if treatment_deltas.is_empty() {
        return Err(Error::validation("need at least one treatment delta"));
    }
    if treatment_deltas.len() != control_deltas.len() {
        return Err(Error::validation(format!(
            "{} treatment deltas vs {} control deltas",
            treatment_deltas.len(),
            control_deltas.len()
        )));
    }
    let n = treatment_deltas.len() as f64;
    let mut double_sum = 0.0;
    for t in treatment_deltas {
        for c in control_deltas {
            double_sum += t - c;
        }
    }
    let mu_hat = double_sum / (n * n);
    let mean_diff = stats::mean(treatment_deltas) - stats::mean(control_deltas);
    debug_assert!(
        (mu_hat - mean_diff).abs() <= 1e-12 * mu_hat.abs().max(1.0),
        "double-sum estimator diverged from mean difference: {mu_hat} vs {mean_diff}"
    );

    let p_value = stats::welch_t_test(treatment_deltas, control_deltas);
    let significant = p_value.map_or(false, |p| p < alpha);
    Ok(TreatmentEffectEstimate {
        pair,
        mu_hat,
        treatment_deltas: treatment_deltas.to_vec(),
        control_deltas: control_deltas.to_vec(),
        p_value,
        significant,
    })
}

/// Unweighted per-topic and per-action means over a complete
/// (topic, action) grid of estimates. Missing cells are all reported.
pub fn aggregate_effects(
    estimates: &[TreatmentEffectEstimate],
    topics: &[String],
    actions: &[Interaction],
) -> Result<(BTreeMap<String, f64>, BTreeMap<Interaction, f64>)> {
    let have: BTreeSet<(&str, Interaction)> =
        estimates.iter().map(|e| (e.pair.topic.as_str(), e.pair.action)).collect();
    let missing: Vec<String> = topics
        .iter()
        .flat_map(|t| actions.iter().map(move |a| (t, *a)))
        .filter(|(t, a)| !have.contains(&(t.as_str(), *a)))
        .map(|(t, a)| format!("({t}, {a})"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(
            missing.into_iter().map(|m| format!("missing estimate for {m}")).collect(),
        ));
    }

    let cell = |t: &str, a: Interaction| -> f64 {
        estimates
            .iter()
            .find(|e| e.pair.topic == t && e.pair.action == a)
            .map(|e| e.mu_hat)
            .unwrap_or(f64::NAN)
    };
    let by_topic = topics
        .iter()
        .map(|t| {
            let vals: Vec<f64> = actions.iter().map(|&a| cell(t, a)).collect();
            (t.clone(), stats::mean(&vals))
        })
        .collect();
    let by_action = actions
        .iter()
        .map(|&a| {
            let vals: Vec<f64> = topics.iter().map(|t| cell(t, a)).collect();
            (a, stats::mean(&vals))
        })
        .collect();
    Ok((by_topic, by_action))
}

/// Planted nuisance structure for estimator calibration: true effects,
/// carryover terms, and zero-sum period/sequence effects.
#[derive(Debug, Clone)]
pub struct NuisanceModel {
    /// True effect per (topic, action).
    pub mu: BTreeMap<(String, Interaction), f64>,
    /// Carryover left behind by each (topic, action) treatment.
    pub lambda: BTreeMap<(String, Interaction), f64>,
    /// Carryover left behind by the washout primers.
    pub lambda_washout: f64,
    /// Period effects, one per position, summing to zero.
    pub rho: Vec<f64>,
    /// Sequence effects, one per Latin-square row, summing to zero.
    pub gamma: Vec<f64>,
}

/// One synthetic measured-effect cell: the effect observed when `topic`
/// was treated with `action` at `position` within `sequence_index`.
#[derive(Debug, Clone)]
pub struct ForwardCell {
    pub action: Interaction,
    pub sequence_index: usize,
    pub position: usize,
    pub topic: String,
    pub value: f64,
}

/// Generates the synthetic measured-effect grid implied by a nuisance
/// model and a crossover plan.
///
/// Position 1 cells carry mu + rho_1 + gamma_s; later positions also pick
/// up -(lambda_washout - lambda_prev) from the preceding block. Averaging
/// a pair's three occurrences cancels the zero-sum terms and leaves
/// mu + (2/3)(lambda_prev - lambda_washout).
pub fn nuisance_forward_model(
    model: &NuisanceModel,
    plan: &TrialPlan,
) -> Result<Vec<ForwardCell>> {
    let m = plan.topics.len();
    let mut problems = Vec::new();
    if model.rho.len() != m {
        problems.push(format!("rho has {} entries, want {m}", model.rho.len()));
    }
    if model.gamma.len() != plan.sequences.len() {
        problems.push(format!("gamma has {} entries, want {}", model.gamma.len(), plan.sequences.len()));
    }
    if model.rho.iter().sum::<f64>().abs() > 1e-9 {
        problems.push("rho must sum to zero".into());
    }
    if model.gamma.iter().sum::<f64>().abs() > 1e-9 {
        problems.push("gamma must sum to zero".into());
    }
    for action in &plan.interactions {
        for topic in &plan.topics {
            if !model.mu.contains_key(&(topic.clone(), *action)) {
                problems.push(format!("mu missing for ({topic}, {action})"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let lambda = |topic: &str, action: Interaction| -> f64 {
        model.lambda.get(&(topic.to_string(), action)).copied().unwrap_or(0.0)
    };

    let mut cells = Vec::new();
    for &action in &plan.interactions {
        for sequence in &plan.sequences {
            for (p, topic) in sequence.topics.iter().enumerate() {
                let mut value = model.mu[&(topic.clone(), action)]
                    + model.rho[p]
                    + model.gamma[sequence.index - 1];
                if p > 0 {
                    let prev = &sequence.topics[p - 1];
                    value -= model.lambda_washout - lambda(prev, action);
                }
                cells.push(ForwardCell {
                    action,
                    sequence_index: sequence.index,
                    position: p + 1,
                    topic: topic.clone(),
                    value,
                });
            }
        }
    }
    Ok(cells)
}

/// Mean of the forward-model cells for one (topic, action) pair; the
/// quantity the crossover estimator actually reports.
pub fn average_cells(cells: &[ForwardCell], topic: &str, action: Interaction) -> f64 {
    let vals: Vec<f64> = cells
        .iter()
        .filter(|c| c.topic == topic && c.action == action)
        .map(|c| c.value)
        .collect();
    stats::mean(&vals)
}

#[derive(Debug, Clone)]
pub struct CarryoverTestResult {
    pub interaction: Interaction,
    pub f_stat: f64,
    pub p_value: f64,
    pub group_means: Vec<f64>,
    pub max_mean_diff: f64,
    pub significant: bool,
}

/// One-way ANOVA over per-puppet sums of treatment effects grouped by
/// treatment sequence. Differential carryover shows up as unequal group
/// sums; a uniform design with symmetric carryover accepts the null.
pub fn test_carryover(
    interaction: Interaction,
    sums_by_sequence: &[Vec<f64>],
    alpha: f64,
) -> Result<CarryoverTestResult> {
    if sums_by_sequence.len() < 2 {
        return Err(Error::validation("carryover test needs at least two sequences"));
    }
    if sums_by_sequence.iter().any(|g| g.len() < 2) {
        return Err(Error::validation("carryover test needs at least two puppets per sequence"));
    }
    let anova = stats::one_way_anova(sums_by_sequence)?;
    Ok(CarryoverTestResult {
        interaction,
        f_stat: anova.f_stat,
        p_value: anova.p_value,
        group_means: anova.group_means,
        max_mean_diff: anova.max_mean_diff,
        significant: anova.p_value < alpha,
    })
}

/// One observation for the influence decomposition: an observed effect
/// recorded for (topic, action) at a sequence position.
#[derive(Debug, Clone)]
pub struct InfluenceCell {
    pub topic: String,
    pub action: Interaction,
    pub position: usize,
    pub mu_hat: f64,
}

#[derive(Debug, Clone)]
pub struct InfluenceSolution {
    pub topic_influence: BTreeMap<String, f64>,
    pub action_influence: BTreeMap<Interaction, f64>,
    pub position_influence: BTreeMap<usize, f64>,
    /// Root-mean-square residual of the log-domain fit.
    pub residual_rms: f64,
    /// Observations clamped up to the positivity floor.
    pub clamped_count: usize,
}

impl InfluenceSolution {
    pub fn max_action(&self) -> Option<(Interaction, f64)> {
        self.action_influence
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (*k, *v))
    }
}

/// Splits observed effects into multiplicative topic, action, and
/// position influences by least squares on
/// log(mu) = log f1(topic) + log f2(action) + log f3(position).
///
/// The additive log model has two gauge freedoms (constants can shift
/// between factors); they are fixed by mean(log f1) = 0 and
/// mean(log f3) = 0, which pins a unique solution while preserving every
/// ratio. Non-positive observations are incompatible with the log model
/// and are clamped up to `INFLUENCE_CLAMP_EPSILON`, with the count
/// reported.
pub fn decompose_influence(cells: &[InfluenceCell]) -> Result<InfluenceSolution> {
    if cells.is_empty() {
        return Err(Error::validation("influence grid is empty"));
    }
    let topics: Vec<String> = {
        let mut t: Vec<String> = cells.iter().map(|c| c.topic.clone()).collect();
        t.sort();
        t.dedup();
        t
    };
    let actions: Vec<Interaction> = {
        let mut a: Vec<Interaction> = cells.iter().map(|c| c.action).collect();
        a.sort();
        a.dedup();
        a
    };
    let positions: Vec<usize> = {
        let mut p: Vec<usize> = cells.iter().map(|c| c.position).collect();
        p.sort();
        p.dedup();
        p
    };

    let clamped_count = cells.iter().filter(|c| c.mu_hat <= 0.0).count();
    if clamped_count == cells.len() {
        return Err(Error::Analysis(
            "every observed effect was non-positive; nothing to decompose".into(),
        ));
    }

    let n_t = topics.len();
    let n_a = actions.len();
    let n_p = positions.len();
    let unknowns = n_t + n_a + n_p;
    let rows = cells.len();

    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, cell) in cells.iter().enumerate() {
        let ti = topics.iter().position(|t| *t == cell.topic).unwrap();
        let ai = actions.iter().position(|x| *x == cell.action).unwrap();
        let pi = positions.iter().position(|p| *p == cell.position).unwrap();
        a[(r, ti)] = 1.0;
        a[(r, n_t + ai)] = 1.0;
        a[(r, n_t + n_a + pi)] = 1.0;
        b[r] = cell.mu_hat.max(INFLUENCE_CLAMP_EPSILON).ln();
    }

    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-10)
        .map_err(|e| Error::Analysis(format!("influence solve failed: {e}")))?;

    let residual = (&a * &x) - &b;
    let residual_rms = (residual.iter().map(|r| r * r).sum::<f64>() / rows as f64).sqrt();

    // fix the two gauge freedoms: shift constants between factors so
    // mean(log f1) = mean(log f3) = 0; predictions are unchanged
    let mean_t: f64 = (0..n_t).map(|i| x[i]).sum::<f64>() / n_t as f64;
    let mean_p: f64 = (0..n_p).map(|i| x[n_t + n_a + i]).sum::<f64>() / n_p as f64;

    let topic_influence = topics
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), (x[i] - mean_t).exp()))
        .collect();
    let action_influence = actions
        .iter()
        .enumerate()
        .map(|(i, act)| (*act, (x[n_t + i] + mean_t + mean_p).exp()))
        .collect();
    let position_influence = positions
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, (x[n_t + n_a + i] - mean_p).exp()))
        .collect();

    Ok(InfluenceSolution {
        topic_influence,
        action_influence,
        position_influence,
        residual_rms,
        clamped_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::build_trial_plan;
    use approx::assert_relative_eq;

    fn plan3() -> TrialPlan {
        let topics: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        build_trial_plan(
            &topics,
            &[Interaction::Search, Interaction::Like],
            2,
            &["w".to_string()],
            5,
        )
        .unwrap()
    }

    #[test]
    fn observed_effect_is_mean_difference() {
        let est = observed_effect(
            TreatmentPair::new("NFL", Interaction::Like),
            &[0.3, 0.2, 0.25, 0.25],
            &[0.05, 0.0, 0.05, 0.1],
            0.05,
        )
        .unwrap();
        assert_relative_eq!(est.mu_hat, 0.20, epsilon = 1e-12);
    }

    #[test]
    fn observed_effect_null_case() {
        let xs = [0.1, 0.2, 0.15, 0.18];
        let est = observed_effect(
            TreatmentPair::new("NFL", Interaction::Like),
            &xs,
            &xs,
            0.05,
        )
        .unwrap();
        assert_relative_eq!(est.mu_hat, 0.0, epsilon = 1e-15);
        assert!(!est.significant);
    }

    // Brute-force all 16 cross pairs and compare against the closed form.
    #[test]
    fn double_sum_identity_brute_force() {
        let t = [0.31, -0.04, 0.22, 0.18];
        let c = [0.02, 0.07, -0.01, 0.05];
        let mut brute = 0.0;
        for x in t {
            for y in c {
                brute += x - y;
            }
        }
        brute /= 16.0;
        let est =
            observed_effect(TreatmentPair::new("A", Interaction::Open), &t, &c, 0.05).unwrap();
        assert_relative_eq!(est.mu_hat, brute, epsilon = 1e-12);
        assert_relative_eq!(
            est.mu_hat,
            stats::mean(&t) - stats::mean(&c),
            epsilon = 1e-12
        );
    }

    #[test]
    fn observed_effect_single_sample_has_no_p_value() {
        let est =
            observed_effect(TreatmentPair::new("A", Interaction::Like), &[0.2], &[0.1], 0.05)
                .unwrap();
        assert_relative_eq!(est.mu_hat, 0.1, epsilon = 1e-12);
        assert!(est.p_value.is_none());
        assert!(!est.significant);
    }

    #[test]
    fn observed_effect_rejects_length_mismatch() {
        assert!(observed_effect(
            TreatmentPair::new("A", Interaction::Like),
            &[0.1, 0.2],
            &[0.1],
            0.05
        )
        .is_err());
    }

    #[test]
    fn aggregate_means_match_hand_arithmetic() {
        let actions =
            [Interaction::Search, Interaction::Open, Interaction::Like, Interaction::Follow];
        let values = [0.0, 20.0, 22.0, 5.0];
        let estimates: Vec<TreatmentEffectEstimate> = actions
            .iter()
            .zip(values)
            .map(|(&a, v)| TreatmentEffectEstimate {
                pair: TreatmentPair::new("NFL", a),
                mu_hat: v,
                treatment_deltas: vec![],
                control_deltas: vec![],
                p_value: None,
                significant: false,
            })
            .collect();
        let (by_topic, by_action) =
            aggregate_effects(&estimates, &["NFL".to_string()], &actions).unwrap();
        assert_relative_eq!(by_topic["NFL"], 11.75, epsilon = 1e-12);
        assert_relative_eq!(by_action[&Interaction::Open], 20.0, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_single_cell_passthrough() {
        let estimates = vec![TreatmentEffectEstimate {
            pair: TreatmentPair::new("A", Interaction::Like),
            mu_hat: 0.42,
            treatment_deltas: vec![],
            control_deltas: vec![],
            p_value: None,
            significant: false,
        }];
        let (by_topic, by_action) =
            aggregate_effects(&estimates, &["A".to_string()], &[Interaction::Like]).unwrap();
        assert_relative_eq!(by_topic["A"], 0.42);
        assert_relative_eq!(by_action[&Interaction::Like], 0.42);
    }

    #[test]
    fn aggregate_lists_missing_cells() {
        let err = aggregate_effects(
            &[],
            &["A".to_string()],
            &[Interaction::Like, Interaction::Open],
        )
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("(A, like)"), "{text}");
        assert!(text.contains("(A, open)"), "{text}");
    }

    fn model_for(plan: &TrialPlan, mu_val: f64) -> NuisanceModel {
        let mut mu = BTreeMap::new();
        for a in &plan.interactions {
            for t in &plan.topics {
                mu.insert((t.clone(), *a), mu_val);
            }
        }
        NuisanceModel {
            mu,
            lambda: BTreeMap::new(),
            lambda_washout: 0.0,
            rho: vec![0.0; plan.topics.len()],
            gamma: vec![0.0; plan.sequences.len()],
        }
    }

    // Zero-sum cancellation: with lambda = 0, rho = (1, 0, -1) and
    // gamma = (2, -1, -1), the three cells of any pair average exactly
    // to mu.
    #[test]
    fn uniform_design_cancels_period_and_sequence_effects() {
        let plan = plan3();
        let mut model = model_for(&plan, 10.0);
        model.rho = vec![1.0, 0.0, -1.0];
        model.gamma = vec![2.0, -1.0, -1.0];
        let cells = nuisance_forward_model(&model, &plan).unwrap();
        assert_relative_eq!(average_cells(&cells, "A", Interaction::Search), 10.0, epsilon = 1e-12);
    }

    // Carryover algebra: mu_BS = 10, lambda_AS = 3, lambda_w = 1 gives an
    // average of 10 + (2/3) * (3 - 1).
    #[test]
    fn carryover_shifts_average_by_two_thirds() {
        let plan = plan3();
        let mut model = model_for(&plan, 10.0);
        model.lambda.insert(("A".to_string(), Interaction::Search), 3.0);
        model.lambda_washout = 1.0;
        let cells = nuisance_forward_model(&model, &plan).unwrap();
        // B's predecessor in the cyclic square is always A
        assert_relative_eq!(
            average_cells(&cells, "B", Interaction::Search),
            10.0 + (2.0 / 3.0) * 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_nuisance_grid_is_flat() {
        let plan = plan3();
        let model = model_for(&plan, 7.5);
        let cells = nuisance_forward_model(&model, &plan).unwrap();
        assert!(cells.iter().all(|c| (c.value - 7.5).abs() < 1e-12));
    }

    #[test]
    fn forward_model_rejects_nonzero_sums() {
        let plan = plan3();
        let mut model = model_for(&plan, 1.0);
        model.rho = vec![1.0, 0.0, 0.0];
        assert!(nuisance_forward_model(&model, &plan).is_err());
    }

    #[test]
    fn carryover_test_degenerate_groups() {
        let groups = vec![vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]];
        let r = test_carryover(Interaction::Like, &groups, 0.05).unwrap();
        assert_eq!(r.f_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn carryover_test_detects_shifted_sequence() {
        let groups = vec![vec![1.0; 4], vec![1.0; 4], vec![5.0; 4]];
        let r = test_carryover(Interaction::Like, &groups, 0.05).unwrap();
        assert!(r.p_value < 0.001);
        assert!(r.significant);
        assert_relative_eq!(r.max_mean_diff, 4.0, epsilon = 1e-12);
    }

    fn planted_cells(f1: &[(&str, f64)], f2: &[(Interaction, f64)], f3: &[f64]) -> Vec<InfluenceCell> {
        let mut cells = Vec::new();
        for (t, tv) in f1 {
            for (a, av) in f2 {
                for (p, pv) in f3.iter().enumerate() {
                    cells.push(InfluenceCell {
                        topic: t.to_string(),
                        action: *a,
                        position: p + 1,
                        mu_hat: tv * av * pv,
                    });
                }
            }
        }
        cells
    }

    // Forward-synthesis oracle: build a grid from known factors and check
    // the recovered ratios.
    #[test]
    fn decomposition_recovers_planted_factors() {
        let cells = planted_cells(
            &[("A", 1.0), ("B", 2.0), ("C", 4.0)],
            &[(Interaction::Search, 1.0), (Interaction::Like, 3.0)],
            &[1.0, 1.0],
        );
        let sol = decompose_influence(&cells).unwrap();
        let f1a = sol.topic_influence["A"];
        assert_relative_eq!(sol.topic_influence["B"] / f1a, 2.0, epsilon = 1e-9);
        assert_relative_eq!(sol.topic_influence["C"] / f1a, 4.0, epsilon = 1e-9);
        let f2s = sol.action_influence[&Interaction::Search];
        assert_relative_eq!(sol.action_influence[&Interaction::Like] / f2s, 3.0, epsilon = 1e-9);
        assert!(sol.residual_rms < 1e-9, "residual {}", sol.residual_rms);
        assert_eq!(sol.clamped_count, 0);
    }

    #[test]
    fn uniform_grid_gives_unit_ratios() {
        let cells = planted_cells(
            &[("A", 1.0), ("B", 1.0)],
            &[(Interaction::Search, 1.0), (Interaction::Like, 1.0)],
            &[1.0, 1.0],
        );
        let mut cells = cells;
        for c in &mut cells {
            c.mu_hat = 0.7;
        }
        let sol = decompose_influence(&cells).unwrap();
        for v in sol.topic_influence.values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-9);
        }
        for v in sol.position_influence.values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn negative_cell_is_clamped_not_fatal() {
        let mut cells = planted_cells(
            &[("A", 1.0), ("B", 2.0)],
            &[(Interaction::Search, 1.0), (Interaction::Like, 2.0)],
            &[1.0],
        );
        cells[0].mu_hat = -0.5;
        let sol = decompose_influence(&cells).unwrap();
        assert_eq!(sol.clamped_count, 1);
        assert!(sol.topic_influence.values().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn all_clamped_grid_is_an_error() {
        let mut cells = planted_cells(
            &[("A", 1.0)],
            &[(Interaction::Search, 1.0)],
            &[1.0, 1.0],
        );
        for c in &mut cells {
            c.mu_hat = -1.0;
        }
        assert!(decompose_influence(&cells).is_err());
    }

    // Scale equivariance: scaling every observation by c scales the
    // gauge-free factor (actions) by c and leaves the others fixed.
    #[test]
    fn scaling_moves_only_action_influence() {
        let base = planted_cells(
            &[("A", 1.0), ("B", 2.0), ("C", 3.0)],
            &[(Interaction::Search, 0.5), (Interaction::Like, 2.0)],
            &[1.0, 1.2, 0.9],
        );
        let scaled: Vec<InfluenceCell> = base
            .iter()
            .map(|c| InfluenceCell { mu_hat: c.mu_hat * 5.0, ..c.clone() })
            .collect();
        let s1 = decompose_influence(&base).unwrap();
        let s2 = decompose_influence(&scaled).unwrap();
        for (t, v) in &s1.topic_influence {
            assert_relative_eq!(s2.topic_influence[t], *v, epsilon = 1e-9);
        }
        for (p, v) in &s1.position_influence {
            assert_relative_eq!(s2.position_influence[p], *v, epsilon = 1e-9);
        }
        for (a, v) in &s1.action_influence {
            assert_relative_eq!(s2.action_influence[a], v * 5.0, epsilon = 1e-8);
        }
    }
}
