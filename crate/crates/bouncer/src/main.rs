use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fermi_bouncer::config::Pipeline;
use fermi_bouncer::sweep::{window_label, SweepManifest, AGGREGATE_FILE};
use fermi_bouncer::{analyze, load_config, run, sweep, RunConfig, RunOptions, RunOutcome};
use fermi_core::windows::{classify, enumerate_windows};
use fermi_core::HalfIndex;

/// Atoms bouncing on a modulated evanescent-wave mirror.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the acceleration windows and classify the configured λ.
    Windows(WindowArgs),
    /// Propagate a classical ensemble.
    Classical(Common),
    /// Propagate a wavepacket.
    Quantum(Common),
    /// Run the config's [sweep] block.
    Sweep(Common),
    /// Verify a finished run and recompute its diagnostics.
    Analyze(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set physics.scaled.lambda=2.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Largest λ to list.
    #[arg(long, default_value_t = 10.0)]
    lambda_max: f64,
}

fn load(args: &Common, pipeline: Option<Pipeline>) -> anyhow::Result<RunConfig> {
    let mut set = args.set.clone();
    if let Some(p) = pipeline {
        let name = match p {
            Pipeline::Classical => "classical",
            Pipeline::Quantum => "quantum",
            Pipeline::Both => "both",
        };
        let from_file = load_config(&args.config, &args.set)
            .map(|c| c.pipeline)
            .with_context(|| format!("loading {}", args.config.display()))?;
        // `both` already includes the requested pipeline.
        if from_file != p && from_file != Pipeline::Both {
            set.insert(0, format!("pipeline={name}"));
        }
    }
    load_config(&args.config, &set).with_context(|| format!("loading {}", args.config.display()))
}

fn report(outcome: &RunOutcome) -> ExitCode {
    let m = outcome.manifest();
    if matches!(outcome, RunOutcome::Unchanged(_)) {
        println!("{}: unchanged (existing manifest matches the config)", m.name);
    }
    println!("status = {:?}", m.status);
    if let Some(e) = &m.error {
        println!("error = {e}");
    }
    for (k, v) in &m.summary {
        println!("{k} = {v}");
    }
    if outcome.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn windows(args: &WindowArgs) -> anyhow::Result<ExitCode> {
    println!("{:>6} {:>16} {:>16}", "s", "lower", "upper");
    for w in enumerate_windows(args.lambda_max, false) {
        println!("{:>6} {:>16.10} {:>16.10}", w.s.to_string(), w.lower, w.upper);
    }
    if let Some(path) = &args.config {
        let config = load_config(path, &args.set).with_context(|| format!("loading {}", path.display()))?;
        let lambda = config.scaled_params()?.lambda;
        let label = classify(lambda, HalfIndex::from_twice(1000), false)
            .map_or_else(|| window_label(-1.0), |w| window_label(w.s.twice() as f64));
        println!("lambda = {lambda} -> {label}");
    }
    Ok(ExitCode::SUCCESS)
}

fn main_inner() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Windows(args) => windows(args),
        Command::Classical(args) | Command::Quantum(args) => {
            let pipeline = match cli.command {
                Command::Classical(_) => Pipeline::Classical,
                _ => Pipeline::Quantum,
            };
            let config = load(args, Some(pipeline))?;
            let opts = RunOptions { force: args.force, workers: args.workers };
            let outcome = run(&config, &opts)?;
            println!("output = {}", config.resolved_output_dir().display());
            Ok(report(&outcome))
        }
        Command::Sweep(args) => {
            let config = load(args, None)?;
            if config.sweep.is_none() {
                bail!("{} has no [sweep] block", args.config.display());
            }
            let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let result = sweep(&config, workers, args.force)?;
            println!("aggregate = {}", result.dir.join(AGGREGATE_FILE).display());
            print!("{}", result.aggregate.to_text());
            Ok(if result.all_succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Analyze(args) => {
            let config = load(args, None)?;
            let dir = config.resolved_output_dir();
            if config.sweep.is_some() {
                let manifest = SweepManifest::read(&dir)?;
                manifest.verify(&dir)?;
                print!("{}", std::fs::read_to_string(dir.join(AGGREGATE_FILE))?);
                for row in &manifest.rows {
                    let kv = analyze::analyze_dir(&dir.join(&row.run_dir))?;
                    println!("[row {}]", row.index);
                    print!("{}", kv.to_text());
                }
            } else {
                print!("{}", analyze::analyze_dir(&dir)?.to_text());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
