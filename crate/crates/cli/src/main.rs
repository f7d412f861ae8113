use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tuttenet_cli::commands::{self, CheckOptions, Logger};
use tuttenet_cli::{configure_threads, CliError, JobFile, Result, Workflow};

/// Injective volumetric deformations from stacked Tutte-embedding layers.
///
/// Exit codes: 0 success, 1 invariant failure, 2 configuration error, 3 numerical failure.
/// Set TUTTENET_THREADS to fix the number of worker threads.
#[derive(Parser)]
#[command(name = "tuttenet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Do not echo progress lines to stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a net against handle constraints and write a checkpoint.
    Elastic(TrainArgs),
    /// Train a net to carry one mesh onto another and write a checkpoint.
    Fit(TrainArgs),
    /// Map geometry forward through a checkpoint.
    Apply(MapArgs),
    /// Map geometry backward through a checkpoint.
    Invert(MapArgs),
    /// Verify certificates, inversion and Jacobians of a checkpoint.
    Check(CheckArgs),
    /// Write distortion statistics of a checkpoint over a geometry file as CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Job file (JSON).
    job: PathBuf,
    /// Overrides the job's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the job's output checkpoint path.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    /// Optional job file; flags override its fields.
    job: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Optional job file; flags override its fields.
    job: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Seed of the random probe points.
    #[arg(long)]
    seed: Option<u64>,
    /// Probe points for the round-trip and collision checks.
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    /// Probe points for the finite-difference Jacobian check.
    #[arg(long, default_value_t = 100)]
    jacobian_points: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Geometry whose points are evaluated.
    #[arg(long)]
    input: PathBuf,
    /// Histogram CSV.
    #[arg(long)]
    output: PathBuf,
    /// Summary statistics CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

fn load_job(path: Option<&PathBuf>, workflow: Workflow) -> Result<JobFile> {
    let job = match path {
        Some(p) => JobFile::load(p)?,
        None => JobFile::new(workflow),
    };
    if job.workflow != workflow {
        return Err(CliError::Config(format!(
            "workflow: job is {:?} but the command is {:?}",
            job.workflow.name(),
            workflow.name()
        )));
    }
    Ok(job)
}

/// Runs a command; `log_path` is set as soon as the job names a log file.
fn run(cli: Cli, log: &mut Logger, log_path: &mut Option<PathBuf>) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Elastic(a) => {
            let job = train_job(a, Workflow::Elastic, log_path)?;
            commands::run_elastic_job(&job, log).map(drop)
        }
        Command::Fit(a) => {
            let job = train_job(a, Workflow::Fit, log_path)?;
            commands::run_fit_job(&job, log).map(drop)
        }
        Command::Apply(a) => map(a, Workflow::Apply, log, log_path),
        Command::Invert(a) => map(a, Workflow::Invert, log, log_path),
        Command::Check(a) => {
            let mut job = load_job(a.job.as_ref(), Workflow::Check)?;
            log_path.clone_from(&job.log);
            job.checkpoint = a.checkpoint.or(job.checkpoint);
            let opts = CheckOptions {
                seed: a.seed.unwrap_or(job.seed),
                round_trip_points: a.points,
                jacobian_points: a.jacobian_points,
            };
            commands::run_check_job(&job, &opts, log).map(drop)
        }
        Command::Report(a) => {
            commands::run_report(&a.checkpoint, &a.input, &a.output, a.summary.as_deref(), a.bins, log).map(drop)
        }
    }
}

fn train_job(a: TrainArgs, workflow: Workflow, log_path: &mut Option<PathBuf>) -> Result<JobFile> {
    let mut job = load_job(Some(&a.job), workflow)?;
    log_path.clone_from(&job.log);
    job.seed = a.seed.unwrap_or(job.seed);
    job.output = a.output.or(job.output);
    Ok(job)
}

fn map(a: MapArgs, workflow: Workflow, log: &mut Logger, log_path: &mut Option<PathBuf>) -> Result<()> {
    let mut job = load_job(a.job.as_ref(), workflow)?;
    log_path.clone_from(&job.log);
    job.checkpoint = a.checkpoint.or(job.checkpoint);
    job.input = a.input.or(job.input);
    job.output = a.output.or(job.output);
    commands::run_map_job(&job, log).map(drop)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut log = Logger::new(!cli.quiet);
    let mut log_path = None;
    let result = run(cli, &mut log, &mut log_path);
    if let Err(e) = &result {
        log.lines.push(format!("error={:?} exit_code={}", e.to_string(), e.exit_code()));
    }
    let saved = log_path.map_or(Ok(()), |p| log.save(&p));
    match result.and(saved) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
