use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dqas::pipeline::{self, PipelineConfig, PipelineError, RunOptions, Stage};

/// Distributed quantum architecture search.
#[derive(Parser, Debug)]
#[command(name = "dqas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stage 1: generate K_a random distributed circuits.
    Generate(RunArgs),
    /// Stage 2: rank by DAG path count and keep the top K_p.
    ScorePaths(RunArgs),
    /// Stage 3: rank by expressibility and keep the top K_e.
    ScoreExpressibility(RunArgs),
    /// Stage 4: train candidates in expressibility order.
    Train(RunArgs),
    /// All four stages, then the report.
    Pipeline(RunArgs),
    /// Render histograms, the query trace and the summary table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker-thread count (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Pipeline config (TOML); its output_dir is reported.
    #[arg(long, required_unless_present = "dir")]
    config: Option<PathBuf>,
    /// Accepted for symmetry with the other subcommands; a report never reruns anything.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory to report on.
    #[arg(long, conflicts_with = "config")]
    dir: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn load(args: &RunArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::load(&args.config).map_err(Failure::from)?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run_stage(args: &RunArgs, until: Stage) -> Result<(), Failure> {
    let cfg = load(args)?;
    let status = pipeline::run(
        &cfg,
        RunOptions {
            until,
            ..RunOptions::default()
        },
    )?;
    let names: Vec<&str> = status.completed.iter().map(|s| s.name()).collect();
    println!(
        "{}: completed stages [{}], ground energy {:.6}",
        cfg.output_dir.display(),
        names.join(", "),
        status.ground_energy
    );
    if until == Stage::Train {
        println!("queries recorded: {}", status.queries_done);
    }
    Ok(())
}

fn report(dir: &Path) -> Result<(), Failure> {
    let rep = pipeline::build_report(dir)?;
    let files = pipeline::write_report(&rep)
        .with_context(|| format!("writing report under {}", dir.display()))
        .map_err(Failure::Runtime)?;
    print!("{}", rep.summary_table());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(a) => run_stage(&a, Stage::Generate),
        Command::ScorePaths(a) => run_stage(&a, Stage::Paths),
        Command::ScoreExpressibility(a) => run_stage(&a, Stage::Expressibility),
        Command::Train(a) => run_stage(&a, Stage::Train),
        Command::Pipeline(a) => {
            run_stage(&a, Stage::Train)?;
            let cfg = load(&a)?;
            report(&cfg.output_dir)
        }
        Command::Report(a) => {
            let dir = match (a.dir, a.config) {
                (Some(d), _) => d,
                (None, Some(c)) => PipelineConfig::load(&c).map_err(Failure::from)?.output_dir,
                (None, None) => unreachable!("clap enforces one of --dir/--config"),
            };
            report(&dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
