//! Diagnostic sweep for simulator calibration. Ignored by default; run
//! with `cargo test --test probe --release -- --ignored --nocapture` to
//! inspect recovered orderings across seeds while tuning platform
//! defaults.

use feedlab::analysis::analyze_composed;
use feedlab::config::ExperimentConfig;
use feedlab::dataset::{compose_trial, Labeling, Measure};
use feedlab::sim::Interaction;
use feedlab::trial::run_trial;

const PLANTED: [(Interaction, f64); 5] = [
    (Interaction::Search, 0.0),
    (Interaction::Open, 0.4),
    (Interaction::Follow, 0.6),
    (Interaction::Like, 0.8),
    (Interaction::Join, 1.2),
];

struct Outcome {
    ordered: bool,
    search_small: bool,
    f2_ordered: bool,
    carryover_like_p: f64,
    mus: Vec<f64>,
    bad_pair: Option<String>,
}

fn run_one(config: &ExperimentConfig) -> Outcome {
    let plan = config.build_plan().unwrap();
    let library = config.build_library().unwrap();
    let dataset = run_trial(&plan, &library, &config.platform, None).unwrap();
    let composed = compose_trial(
        &dataset,
        &library,
        &plan,
        config.provider().unwrap().as_ref(),
        Labeling::TrueTopic,
    )
    .unwrap();
    let result = analyze_composed(&composed, 0.05).unwrap();
    let table = result.table(Measure::TopicPrevalence);
    let mus: Vec<f64> = PLANTED.iter().map(|(a, _)| table.mu_action[a] * 100.0).collect();
    let f2: Vec<f64> =
        PLANTED.iter().map(|(a, _)| result.influence.action_influence[a]).collect();
    let bad_pair = mus
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[0] >= w[1])
        .map(|(i, w)| format!("{}({:.1}) !< {}({:.1})", PLANTED[i].0, w[0], PLANTED[i + 1].0, w[1]));
    Outcome {
        ordered: mus.windows(2).all(|w| w[0] < w[1]),
        search_small: mus[0].abs() < 2.0,
        f2_ordered: f2.windows(2).all(|w| w[0] < w[1]),
        carryover_like_p: result
            .carryover
            .iter()
            .find(|c| c.interaction == Interaction::Like)
            .map(|c| c.p_value)
            .unwrap_or(f64::NAN),
        mus,
        bad_pair,
    }
}

#[test]
#[ignore]
fn search_drift_anatomy() {
    use feedlab::dataset::Measure;
    for seed in [5u64, 7, 8] {
        let mut config = ExperimentConfig::template(
            vec!["Chiefs".into(), "Elections".into(), "Fitness".into()],
            2000 + seed,
        );
        config.platform.freshness_halflife = 4.5;
        config.platform.explore_quota = 0.0333;
        config.library.sources_per_topic = 20;
        config.library.posts_per_source = 8;
        config.library.topic_diversity = 0.0;
        config.library.other_sources = 200;
        let plan = config.build_plan().unwrap();
        let library = config.build_library().unwrap();
        let dataset = run_trial(&plan, &library, &config.platform, None).unwrap();
        let composed = compose_trial(
            &dataset,
            &library,
            &plan,
            config.provider().unwrap().as_ref(),
            Labeling::TrueTopic,
        )
        .unwrap();
        println!("seed {seed}:");
        for action in [Interaction::Search, Interaction::Open] {
            println!("  action {action}:");
            for position in 1..=3 {
                let mut t_pre = Vec::new();
                let mut t_post = Vec::new();
                let mut c_pre = Vec::new();
                let mut c_post = Vec::new();
                for p in composed.treatment_puppets(action) {
                    let topic = p.sequence_topics.as_ref().unwrap()[position - 1].clone();
                    let pre = p.snapshot(position, 0).unwrap();
                    let post = p.snapshot(position, 5).unwrap();
                    t_pre.push(pre.vectors.topic_prevalence[&topic] * 100.0);
                    t_post.push(post.vectors.topic_prevalence[&topic] * 100.0);
                }
                for c in composed.control_puppets(action) {
                    let pre = c.snapshot(position, 0).unwrap();
                    let post = c.snapshot(position, 5).unwrap();
                    c_pre.push(pre.vectors.topic_prevalence["Cooking"] * 100.0);
                    c_post.push(post.vectors.topic_prevalence["Cooking"] * 100.0);
                }
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                println!(
                    "  pos{position}: treat t {:.2} -> {:.2} (d {:+.2}); ctrl cooking {:.2} -> {:.2} (d {:+.2})",
                    mean(&t_pre),
                    mean(&t_post),
                    mean(&t_post) - mean(&t_pre),
                    mean(&c_pre),
                    mean(&c_post),
                    mean(&c_post) - mean(&c_pre),
                );
            }
        }
        let _ = Measure::TopicPrevalence;
    }
}

#[test]
#[ignore]
fn open_feed_anatomy() {
    let mut config = ExperimentConfig::template(
        vec!["Chiefs".into(), "Elections".into(), "Fitness".into()],
        2000,
    );
    config.platform.freshness_halflife = 6.0;
    config.library.sources_per_topic = 20;
    config.library.posts_per_source = 8;
    config.library.topic_diversity = 0.0;
    config.library.other_sources = 200;
    let plan = config.build_plan().unwrap();
    let library = config.build_library().unwrap();
    let dataset = run_trial(&plan, &library, &config.platform, None).unwrap();
    let composed = compose_trial(
        &dataset,
        &library,
        &plan,
        config.provider().unwrap().as_ref(),
        Labeling::TrueTopic,
    )
    .unwrap();
    let puppet = composed
        .treatment_puppets(Interaction::Open)
        .into_iter()
        .find(|p| p.sequence_index == Some(1) && p.pair_index == 0)
        .unwrap();
    let topic = &puppet.sequence_topics.as_ref().unwrap()[0];
    println!("open puppet, block topic {topic}");
    for dose in [0usize, 5] {
        let snap = puppet.snapshot(1, dose).unwrap();
        let counts: std::collections::BTreeMap<&str, usize> =
            snap.feed.entries.iter().fold(Default::default(), |mut m, e| {
                *m.entry(library.universe.label_for(&e.post.true_topic).leak()).or_insert(0) += 1;
                m
            });
        println!("  dose {dose} tick {}: {:?}", snap.tick, counts);
        for e in snap.feed.entries.iter() {
            let boosted = snap.history_sources.contains(&e.post.source_id);
            let age = snap.tick as i64 - e.post.created_tick;
            print!(
                "[{}{}{} a{age}] ",
                e.rank,
                library.universe.label_for(&e.post.true_topic).chars().next().unwrap(),
                if boosted { "*" } else { "" },
            );
        }
        println!();
    }
}

#[test]
#[ignore]
fn carryover_anatomy() {
    use feedlab::dataset::Measure;
    for seed in 0..4u64 {
        let mut config = ExperimentConfig::template(
            vec!["Chiefs".into(), "Elections".into(), "Fitness".into()],
            2000 + seed,
        );
        config.platform.freshness_halflife = 10.0;
        config.library.topic_diversity = 0.05;
        let plan = config.build_plan().unwrap();
        let library = config.build_library().unwrap();
        let dataset = run_trial(&plan, &library, &config.platform, None).unwrap();
        let composed = compose_trial(
            &dataset,
            &library,
            &plan,
            config.provider().unwrap().as_ref(),
            Labeling::TrueTopic,
        )
        .unwrap();
        let groups = composed.carryover_groups(Interaction::Like, Measure::TopicPrevalence).unwrap();
        println!("seed {seed} Like groups (pp):");
        for (s, g) in groups.iter().enumerate() {
            let vals: Vec<String> = g.iter().map(|v| format!("{:.2}", v * 100.0)).collect();
            let mean = g.iter().sum::<f64>() / g.len() as f64 * 100.0;
            println!("  seq{}: {:?} mean {:.2}", s + 1, vals, mean);
        }
        let cells = composed.position_cells(Measure::TopicPrevalence, 0.05).unwrap();
        for c in cells.iter().filter(|c| c.action == Interaction::Like) {
            println!("  cell {} pos{} mu={:.2}pp", c.topic, c.position, c.mu_hat * 100.0);
        }
    }
}

#[test]
#[ignore]
fn sweep_defaults() {
    let seeds = 20u64;
    for label in ["defaults"] {
        let _ = label;
        let mut ordered = 0;
        let mut search_small = 0;
        let mut f2_ordered = 0;
        let mut carry_ok = 0;
        let mut joint = 0;
        let mut searches = Vec::new();
        let mut example = Vec::new();
        let t0 = std::time::Instant::now();
        for seed in 0..seeds {
            let config = ExperimentConfig::template(
                vec!["Chiefs".into(), "Elections".into(), "Fitness".into()],
                5000 + seed,
            );
            let o = run_one(&config);
            ordered += o.ordered as u32;
            search_small += o.search_small as u32;
            f2_ordered += o.f2_ordered as u32;
            carry_ok += (o.carryover_like_p > 0.05) as u32;
            joint += (o.ordered && o.search_small) as u32;
            searches.push(o.mus[0]);
            if seed == 0 {
                example = o.mus.clone();
            }
            if let Some(bad) = &o.bad_pair {
                println!("    seed {seed}: {bad}");
            }
        }
        println!(
            "defaults: joint {joint}/{seeds} ordered {ordered}/{seeds} search {search_small}/{seeds} f2 {f2_ordered}/{seeds} carry {carry_ok}/{seeds}  ({:.2?}/seed)  mus0={:?}  searches={:?}",
            t0.elapsed() / seeds as u32,
            example.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>(),
            searches.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>()
        );
    }
}
