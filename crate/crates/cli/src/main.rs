//! `mppi` command-line front end: single trials, benchmark sweeps and plots.

mod overrides;
mod plot;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mppi_core::bench::{
    aggregate, format_sig6, read_summary_csv, run_experiment, run_trial, write_csv, ExperimentFile, RunOptions,
    TrialRecord, CSV_TRIALS_HEADER,
};
use mppi_core::dynamics::TaskKind;
use mppi_core::samplers::SamplerKind;
use mppi_core::Error;

use crate::overrides::Overrides;

#[derive(Parser)]
#[command(name = "mppi", version, about = "Sampling-based MPPI control benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop trial and print its CSV row
    Run(RunArgs),
    /// Run every (task, method, trial) cell of an experiment
    Bench(BenchArgs),
    /// Draw one bar chart per task from a summary CSV
    Plot(PlotArgs),
}

/// Flags shared by `run` and `bench`. Each overrides the matching field of
/// the config file.
#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// Experiment file (TOML)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    task: Option<TaskKind>,
    /// normal | cubic-spline | bezier | linear-interp
    #[arg(long, value_parser = parse_sampler)]
    sampler: Option<SamplerKind>,
    /// Knots, control points or waypoints
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Temperature of the importance weights
    #[arg(long)]
    lambda: Option<f64>,
    /// Noise scale: one value for every action dimension, or a comma list
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sigma: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Also write the CSV to this file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Trials per (task, method) cell
    #[arg(long)]
    trials: Option<usize>,
    /// Output prefix; writes <PATH>.trials.csv and <PATH>.summary.csv
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Summary CSV written by `bench`
    #[arg(value_name = "SUMMARY_CSV")]
    input: PathBuf,
    /// Directory for the SVG files; defaults to the input's directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_sampler(s: &str) -> Result<SamplerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error tagged with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        };
        Self { code, error: e.into() }
    }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

/// Rollout threads per controller from `MPPI_THREADS`; unset or 0 means the
/// rayon default.
fn thread_cap() -> Result<usize, Failure> {
    match std::env::var("MPPI_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            usage(anyhow::anyhow!(
                "MPPI_THREADS must be a non-negative integer, got '{v}'"
            ))
        }),
        _ => Ok(0),
    }
}

fn load_file(path: Option<&Path>) -> Result<Option<ExperimentFile>, Failure> {
    // A missing or unreadable config is a usage problem, not a runtime one.
    path.map(|p| ExperimentFile::load(p).map_err(usage)).transpose()
}

fn trial_row(rec: &TrialRecord) -> [String; 8] {
    [
        rec.task.clone(),
        rec.method.clone(),
        rec.trial.to_string(),
        rec.seed.to_string(),
        rec.success.to_string(),
        rec.steps.to_string(),
        format_sig6(rec.mean_iter_ms),
        format_sig6(rec.std_iter_ms),
    ]
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let file = load_file(args.common.config.as_deref())?;
    let over = Overrides::from(&args.common);
    let single = over.single_trial(file)?;
    let threads = thread_cap()?;

    let mppi = single.method.to_mppi(&single.task.bounds)?;
    let mut rec = run_trial(&single.task, &mppi, single.seed, threads)?;
    rec.task = single.task_label;
    rec.method = single.method.label();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_TRIALS_HEADER).map_err(runtime)?;
    w.write_record(trial_row(&rec)).map_err(runtime)?;
    let bytes = w.into_inner().map_err(|e| runtime(anyhow::anyhow!("{e}")))?;
    std::io::stdout().write_all(&bytes).map_err(runtime)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &bytes).map_err(|e| runtime(anyhow::anyhow!("{}: {e}", out.display())))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let file = load_file(args.common.config.as_deref())?;
    let over = Overrides::from(&args.common);
    let file = over.experiment(file, args.trials, args.out);
    let config = file.resolve()?;
    let options = RunOptions {
        threads: thread_cap()?,
        parallel_trials: false,
    };

    let records = run_experiment(&config, options)?;
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: {} / {} trial {} failed: {}",
            r.task,
            r.method,
            r.trial,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let summaries = aggregate(&records)?;
    let (trials_path, summary_path) = write_csv(&summaries, &records, &config.output_path).map_err(runtime)?;
    print!("{}", table::render(&summaries));
    println!();
    println!("wrote {}", trials_path.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), Failure> {
    let summaries = read_summary_csv(&args.input).map_err(usage)?;
    let dir = match args.out {
        Some(d) => d,
        None => args.input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| runtime(anyhow::anyhow!("{}: {e}", dir.display())))?;
    }
    for (task, svg) in plot::render_all(&summaries) {
        let path = dir.join(format!("{}.svg", plot::file_stem(&task)));
        std::fs::write(&path, svg).map_err(|e| runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
