//! Multi-trial benchmark runs, aggregation and CSV output.

mod config;
mod csv_out;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentFile, MethodEntry, NamedTask, TaskEntry};
pub use csv_out::{format_sig6, read_summary_csv, read_trials_csv, write_csv, CSV_SUMMARY_HEADER, CSV_TRIALS_HEADER};

use crate::dynamics::{build_env, Status, TaskSpec};
use crate::mppi::{Controller, MppiConfig};
use crate::samplers::seeded;
use crate::trajectory::{clip_trajectory, shift_horizon, ControlTrajectory};
use crate::{Error, Result};

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub task: String,
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// Steps to reach the goal; `max_steps` for failed trials.
    pub steps: usize,
    pub mean_iter_ms: f64,
    pub std_iter_ms: f64,
    /// Raw per-iteration wall times, kept for pooled statistics.
    pub iter_ms: Vec<f64>,
    pub crashed: bool,
    /// Iterations in which every rollout had infinite cost.
    pub no_viable_events: usize,
    /// Set when the trial aborted with an error; it then counts as failed.
    pub error: Option<String>,
}

/// Aggregate statistics of one (task, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub task: String,
    pub method: String,
    pub trials: usize,
    pub success_pct: f64,
    pub steps_mean: f64,
    pub steps_std: f64,
    pub time_mean_ms: f64,
    pub time_std_ms: f64,
}

/// Execution settings that do not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Rollout threads per controller (0 = rayon default, 1 = sequential).
    pub threads: usize,
    /// Run the trials of an experiment concurrently. Per-iteration wall
    /// times then include contention between trials.
    pub parallel_trials: bool,
}

/// Mean and sample (n - 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Initial nominal: gravity-compensating hover at every step.
pub fn hover_nominal(task: &TaskSpec, horizon: usize) -> Result<ControlTrajectory> {
    let env = build_env(task.clone())?;
    let hover = ControlTrajectory::constant(horizon, &env.hover_control())?;
    clip_trajectory(&hover, &task.bounds)
}

/// Runs one closed-loop trial until success, crash or `max_steps`.
pub fn run_trial(task: &TaskSpec, method: &MppiConfig, seed: u64, threads: usize) -> Result<TrialRecord> {
    task.validate()?;
    if method.bounds != task.bounds {
        return Err(Error::config("method bounds must match the task's actuator bounds"));
    }
    let env = build_env(task.clone())?;
    let controller = Controller::new(method.clone())?.with_threads(threads)?;
    let mut rng = seeded(seed);
    let mut nominal = hover_nominal(task, method.horizon)?;
    let mut state = env.initial_state();
    let mut iter_ms = Vec::with_capacity(task.max_steps);
    let mut no_viable_events = 0;

    while state.status == Status::Running && state.step_count < task.max_steps {
        let started = Instant::now();
        let control = match controller.control_step(&env, &state, &nominal, &mut rng) {
            Ok(out) => {
                nominal = out.next_nominal;
                out.control
            }
            Err(Error::NoViableRollout) => {
                no_viable_events += 1;
                let control = nominal.row(0).to_vec();
                nominal = shift_horizon(&nominal, method.shift_fill)?;
                control
            }
            Err(e) => return Err(e),
        };
        iter_ms.push(started.elapsed().as_secs_f64() * 1e3);
        state = env.step_dynamics(&state, &control)?;
    }

    let success = state.status == Status::Success;
    let (mean_iter_ms, std_iter_ms) = mean_std(&iter_ms);
    Ok(TrialRecord {
        task: String::new(),
        method: String::new(),
        trial: 0,
        seed,
        success,
        steps: if success { state.step_count } else { task.max_steps },
        mean_iter_ms,
        std_iter_ms,
        iter_ms,
        crashed: state.status == Status::Crashed,
        no_viable_events,
        error: None,
    })
}

/// Runs every (task, method, trial) cell. Records come back in config order:
/// task-major, then method, then trial. A trial that errors is recorded as
/// a failure at the step cap instead of aborting the sweep.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<Vec<TrialRecord>> {
    let mut jobs = Vec::new();
    for task in &config.tasks {
        for method in &config.methods {
            let mppi = method.to_mppi(&task.spec.bounds)?;
            for (trial, &seed) in config.seeds.iter().enumerate() {
                jobs.push((task, method.label(), mppi.clone(), trial, seed));
            }
        }
    }
    let run = |(task, label, mppi, trial, seed): &(&NamedTask, String, MppiConfig, usize, u64)| {
        let mut rec = run_trial(&task.spec, mppi, *seed, options.threads).unwrap_or_else(|e| TrialRecord {
            task: String::new(),
            method: String::new(),
            trial: 0,
            seed: *seed,
            success: false,
            steps: task.spec.max_steps,
            mean_iter_ms: f64::NAN,
            std_iter_ms: f64::NAN,
            iter_ms: Vec::new(),
            crashed: false,
            no_viable_events: 0,
            error: Some(e.to_string()),
        });
        rec.task = task.label.clone();
        rec.method = label.clone();
        rec.trial = *trial;
        rec
    };
    Ok(if options.parallel_trials {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    })
}

/// Groups records by (task, method) in first-appearance order.
///
/// Failed trials enter the step statistics at the step cap. Time statistics
/// pool every iteration of every trial in the cell.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty set of trials"));
    }
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in records {
        let key = (r.task.as_str(), r.method.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    Ok(keys
        .into_iter()
        .map(|(task, method)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.task == task && r.method == method)
                .collect();
            let successes = cell.iter().filter(|r| r.success).count();
            let steps: Vec<f64> = cell.iter().map(|r| r.steps as f64).collect();
            let (steps_mean, steps_std) = mean_std(&steps);
            let mut times: Vec<f64> = cell.iter().flat_map(|r| r.iter_ms.iter().copied()).collect();
            if times.is_empty() {
                // Records read back from CSV carry only per-trial means.
                times = cell.iter().map(|r| r.mean_iter_ms).filter(|t| t.is_finite()).collect();
            }
            let (time_mean_ms, time_std_ms) = mean_std(&times);
            CellSummary {
                task: task.to_owned(),
                method: method.to_owned(),
                trials: cell.len(),
                success_pct: 100.0 * successes as f64 / cell.len() as f64,
                steps_mean,
                steps_std,
                time_mean_ms,
                time_std_ms,
            }
        })
        .collect())
}
