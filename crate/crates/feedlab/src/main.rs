//! Batch CLI: simulate a crossover trial against the simulated platform,
//! analyze the recorded logs, and summarize the analysis.
//!
//! Exit codes: 0 success, 2 validation error, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use feedlab::analysis::{analyze_composed, write_analysis, ANALYSIS_DIR};
use feedlab::config::ExperimentConfig;
use feedlab::dataset::{compose_trial, kmeans_seed_from, Labeling};
use feedlab::error::Error;
use feedlab::obslog::{load_run, write_run};
use feedlab::report::render_summary;
use feedlab::trial::run_trial;

#[derive(Parser)]
#[command(name = "feedlab", version, about = "Homepage-feed audit laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the crossover trial and write observation logs plus a manifest
    Simulate {
        /// Experiment config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Analyze a run directory and emit report files
    Analyze {
        /// Run directory written by `simulate`
        #[arg(long)]
        out: PathBuf,
        /// Significance level
        #[arg(long)]
        alpha: Option<f64>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a human-readable summary of an analysis directory
    Report {
        /// Run directory (or the analysis directory itself)
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Manifest(_) | Error::InvalidIteration { .. } => 2,
        _ => 3,
    }
}

fn with_pool<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

fn simulate(
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), Error> {
    let mut config = ExperimentConfig::parse_file(&config_path)?;
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    let out_dir = out
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::validation("no output directory: pass --out or set output_dir"))?;

    let plan = config.build_plan()?;
    let library = config.build_library()?;
    let counts = plan.design_counts();
    eprintln!(
        "simulating {} sockpuppets ({} topics x {} interactions, n={})",
        counts.sockpuppets,
        plan.topics.len(),
        plan.interactions.len(),
        plan.puppets_per_cell
    );

    let dataset = run_trial(&plan, &library, &config.platform, jobs)?;
    write_run(&out_dir, &config, &plan, &dataset)?;
    eprintln!(
        "wrote {} logs + manifest to {}",
        dataset.logs.len(),
        out_dir.display()
    );

    if !dataset.failures.is_empty() {
        eprintln!("{} puppet(s) failed:", dataset.failures.len());
        for f in &dataset.failures {
            eprintln!("  {}: {}", f.account_id, f.message);
        }
        return Err(Error::Analysis(format!(
            "{} of {} puppets failed",
            dataset.failures.len(),
            counts.sockpuppets
        )));
    }
    Ok(())
}

fn analyze(out: PathBuf, alpha: Option<f64>, jobs: Option<usize>) -> Result<(), Error> {
    let run = load_run(&out)?;
    let alpha = alpha.unwrap_or(run.config.alpha);
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::validation(format!("--alpha must be in (0,1), got {alpha}")));
    }
    let library = run.config.build_library()?;
    let provider = run.config.provider()?;
    let labeling = Labeling::Clustered { kmeans_seed: kmeans_seed_from(run.config.master_seed) };

    let result = with_pool(jobs, || {
        let composed = compose_trial(&run.dataset, &library, &run.plan, provider.as_ref(), labeling)?;
        analyze_composed(&composed, alpha)
    })?;
    write_analysis(&out, &result)?;
    eprintln!(
        "analysis written to {} ({} measures, {} dose curves)",
        out.join(ANALYSIS_DIR).display(),
        result.tables.len(),
        result.dose.len()
    );
    Ok(())
}

fn report(out: PathBuf) -> Result<(), Error> {
    let dir = if out.join(ANALYSIS_DIR).exists() { out.join(ANALYSIS_DIR) } else { out };
    let summary = render_summary(&dir)?;
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, seed, jobs } => simulate(config, out, seed, jobs),
        Command::Analyze { out, alpha, jobs } => analyze(out, alpha, jobs),
        Command::Report { out } => report(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
