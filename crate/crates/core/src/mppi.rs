//! Rollout costing, importance weighting and the receding-horizon MPPI step.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::samplers::{generate_batch, reconstruct, GaussianSource, KnotSet, SampleBatch, SamplerConfig};
use crate::trajectory::{clip_trajectory, shift_horizon, ActionBounds, ControlTrajectory, ShiftFill};
use crate::{Error, Result};

/// Finite cost substituted for a rollout that crashes, unless the
/// environment overrides it.
pub const DEFAULT_CRASH_PENALTY: f64 = 1e6;

/// A system the controller can roll out.
///
/// `step` must be a pure function of `(state, control)`; rollouts of the same
/// environment are evaluated concurrently.
pub trait Environment: Sync {
    type State: Clone + Send + Sync;

    fn action_dim(&self) -> usize;

    fn step(&self, state: &Self::State, control: &[f64]) -> Self::State;

    fn running_cost(&self, state: &Self::State, control: &[f64]) -> f64;

    fn terminal_cost(&self, state: &Self::State) -> f64;

    fn is_crashed(&self, _state: &Self::State) -> bool {
        false
    }

    /// False once numerical integration has produced NaN or infinities.
    fn is_finite(&self, _state: &Self::State) -> bool {
        true
    }

    /// Cost charged in place of the running cost still to come when a
    /// rollout crashes with `remaining_steps` left in the horizon.
    fn crash_penalty(&self, _remaining_steps: usize) -> f64 {
        DEFAULT_CRASH_PENALTY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub running_total: f64,
    pub terminal: f64,
    pub total: f64,
    pub crashed: bool,
    /// The state went non-finite and the crash penalty was charged instead.
    pub diverged: bool,
}

/// Rolls `env` forward from `x0` under `traj` and accumulates running plus
/// terminal cost.
pub fn trajectory_cost<E: Environment>(env: &E, x0: &E::State, traj: &ControlTrajectory) -> CostBreakdown {
    let h = traj.horizon();
    let mut state = x0.clone();
    let mut running = 0.0;
    for (t, control) in traj.rows().enumerate() {
        running += env.running_cost(&state, control);
        state = env.step(&state, control);
        let remaining = h - t - 1;
        if !env.is_finite(&state) || running.is_nan() {
            let penalty = env.crash_penalty(remaining);
            return CostBreakdown {
                running_total: penalty,
                terminal: 0.0,
                total: penalty,
                crashed: true,
                diverged: true,
            };
        }
        if env.is_crashed(&state) {
            running += env.crash_penalty(remaining);
            return CostBreakdown {
                running_total: running,
                terminal: 0.0,
                total: running,
                crashed: true,
                diverged: false,
            };
        }
    }
    let terminal = env.terminal_cost(&state);
    CostBreakdown {
        running_total: running,
        terminal,
        total: running + terminal,
        crashed: false,
        diverged: false,
    }
}

/// Normalized importance weights, one per rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `1 / sum(w^2)`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.0.iter().map(|w| w * w).sum::<f64>()
    }

    /// All weight on rollout `index`.
    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    /// Accepts hand-built weights that are non-negative and sum to one.
    fn try_from(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }
}

/// `w_k = exp(-(S_k - S_min) / lambda) / sum_j exp(-(S_j - S_min) / lambda)`.
///
/// Subtracting the minimum cost leaves the softmax unchanged and keeps the
/// best rollout's exponent at zero. Non-finite costs get zero weight.
pub fn importance_weights(costs: &[f64], lambda: f64) -> Result<WeightVector> {
    if costs.is_empty() {
        return Err(Error::invalid("importance weights need at least one cost"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {lambda}")));
    }
    if costs.contains(&f64::NEG_INFINITY) {
        return Err(Error::invalid("cost of -inf"));
    }
    let min = costs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NoViableRollout);
    }
    let mut w: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if c.is_finite() {
                (-(c - min) / lambda).exp()
            } else {
                0.0
            }
        })
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    Ok(WeightVector(w))
}

/// `nominal + sum_k w_k * perturbation_k`, clipped to `bounds`.
pub fn update_nominal(
    nominal: &ControlTrajectory,
    batch: &SampleBatch,
    weights: &WeightVector,
    bounds: &ActionBounds,
) -> Result<ControlTrajectory> {
    if batch.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "update_nominal weights",
            expected: batch.len(),
            actual: weights.len(),
        });
    }
    let mut values = nominal.as_slice().to_vec();
    for (pert, &w) in batch.perturbations.iter().zip(weights.as_slice()) {
        if pert.horizon() != nominal.horizon() || pert.dim() != nominal.dim() {
            return Err(Error::DimensionMismatch {
                context: "update_nominal perturbation",
                expected: values.len(),
                actual: pert.as_slice().len(),
            });
        }
        if w == 0.0 {
            continue;
        }
        for (v, e) in values.iter_mut().zip(pert.as_slice()) {
            *v += w * e;
        }
    }
    let updated = ControlTrajectory::from_vec(nominal.horizon(), nominal.dim(), values)?;
    clip_trajectory(&updated, bounds)
}

/// Knot-space variant of the update for structured samplers: the weighted
/// knot noise is added to the nominal's knots and the result reconstructed.
pub fn update_nominal_in_knot_space(
    sampler: &SamplerConfig,
    nominal: &ControlTrajectory,
    batch: &SampleBatch,
    weights: &WeightVector,
    bounds: &ActionBounds,
) -> Result<ControlTrajectory> {
    let knot_noise = batch
        .knot_noise
        .as_ref()
        .ok_or_else(|| Error::invalid("knot-space update needs a structured batch"))?;
    if knot_noise.noise.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "knot-space update weights",
            expected: knot_noise.noise.len(),
            actual: weights.len(),
        });
    }
    let base = KnotSet::extract(nominal, &knot_noise.indices)?;
    let mut values = base.values().to_vec();
    for (eps, &w) in knot_noise.noise.iter().zip(weights.as_slice()) {
        for (v, e) in values.iter_mut().zip(eps) {
            *v += w * e;
        }
    }
    let knots = KnotSet::new(knot_noise.indices.clone(), nominal.dim(), values)?;
    let dense = reconstruct(sampler, &knots, nominal.horizon())?;
    clip_trajectory(&dense, bounds)
}

/// Where the weighted noise is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSpace {
    /// Dense reconstructed perturbations; identical for every sampler.
    #[default]
    Dense,
    /// Knot noise, then reconstruction. Falls back to dense for the
    /// independent sampler.
    Knot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiConfig {
    pub horizon: usize,
    pub rollouts: usize,
    pub lambda: f64,
    pub sampler: SamplerConfig,
    pub bounds: ActionBounds,
    /// Report costs relative to the batch minimum in diagnostics. The
    /// weights always use the shifted form.
    pub baseline_subtraction: bool,
    pub iterations_per_step: usize,
    pub update_space: UpdateSpace,
    pub shift_fill: ShiftFill,
}

impl MppiConfig {
    pub fn new(horizon: usize, rollouts: usize, lambda: f64, sampler: SamplerConfig, bounds: ActionBounds) -> Self {
        Self {
            horizon,
            rollouts,
            lambda,
            sampler,
            bounds,
            baseline_subtraction: true,
            iterations_per_step: 1,
            update_space: UpdateSpace::Dense,
            shift_fill: ShiftFill::RepeatLast,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::config(format!("horizon must be >= 2, got {}", self.horizon)));
        }
        if self.rollouts < 1 {
            return Err(Error::config("rollouts must be >= 1"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.iterations_per_step < 1 {
            return Err(Error::config("iterations_per_step must be >= 1"));
        }
        self.sampler.validate(self.horizon, self.bounds.dim())
    }
}

/// Per-iteration record of one [`Controller::control_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub min_cost: f64,
    /// Mean over finite costs.
    pub mean_cost: f64,
    pub effective_sample_size: f64,
    pub crashed_rollouts: usize,
    pub diverged_rollouts: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub control: Vec<f64>,
    pub next_nominal: ControlTrajectory,
    /// The updated nominal before shifting; `control` is its first row.
    pub updated_nominal: ControlTrajectory,
    pub diagnostics: StepDiagnostics,
}

enum Parallelism {
    Sequential,
    Global,
    Pool(rayon::ThreadPool),
}

/// MPPI controller over a fixed configuration.
///
/// Noise for an iteration is drawn in full before any rollout is evaluated,
/// so results do not depend on how rollouts are scheduled.
pub struct Controller {
    config: MppiConfig,
    parallelism: Parallelism,
}

impl Controller {
    /// Rollouts are evaluated on rayon's global pool.
    pub fn new(config: MppiConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            parallelism: Parallelism::Global,
        })
    }

    /// Caps rollout parallelism: 0 uses the global pool, 1 evaluates
    /// sequentially, anything else builds a dedicated pool.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.parallelism = match threads {
            0 => Parallelism::Global,
            1 => Parallelism::Sequential,
            n => Parallelism::Pool(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::config(format!("cannot build a {n}-thread pool: {e}")))?,
            ),
        };
        Ok(self)
    }

    pub fn config(&self) -> &MppiConfig {
        &self.config
    }

    /// Costs of every rollout in `batch`, ordered by rollout index.
    pub fn evaluate<E: Environment>(&self, env: &E, state: &E::State, batch: &SampleBatch) -> Vec<CostBreakdown> {
        let eval = |traj: &ControlTrajectory| trajectory_cost(env, state, traj);
        match &self.parallelism {
            Parallelism::Sequential => batch.trajectories.iter().map(eval).collect(),
            Parallelism::Global => batch.trajectories.par_iter().map(eval).collect(),
            Parallelism::Pool(pool) => pool.install(|| batch.trajectories.par_iter().map(eval).collect()),
        }
    }

    /// One receding-horizon iteration: sample, cost, weight, update, then
    /// execute the first row and shift.
    pub fn control_step<E, G>(
        &self,
        env: &E,
        state: &E::State,
        nominal: &ControlTrajectory,
        rng: &mut G,
    ) -> Result<StepOutcome>
    where
        E: Environment,
        G: GaussianSource + ?Sized,
    {
        let cfg = &self.config;
        if nominal.horizon() != cfg.horizon || nominal.dim() != cfg.bounds.dim() {
            return Err(Error::DimensionMismatch {
                context: "control_step nominal",
                expected: cfg.horizon * cfg.bounds.dim(),
                actual: nominal.horizon() * nominal.dim(),
            });
        }
        if env.action_dim() != cfg.bounds.dim() {
            return Err(Error::DimensionMismatch {
                context: "control_step environment",
                expected: cfg.bounds.dim(),
                actual: env.action_dim(),
            });
        }
        let start = Instant::now();
        let mut current = nominal.clone();
        let mut last_stats = None;
        for _ in 0..cfg.iterations_per_step {
            let batch = generate_batch(&cfg.sampler, &current, &cfg.bounds, cfg.rollouts, rng)?;
            let costs = self.evaluate(env, state, &batch);
            let totals: Vec<f64> = costs.iter().map(|c| c.total).collect();
            let weights = importance_weights(&totals, cfg.lambda)?;
            current = match cfg.update_space {
                UpdateSpace::Knot if batch.knot_noise.is_some() => {
                    update_nominal_in_knot_space(&cfg.sampler, &current, &batch, &weights, &cfg.bounds)?
                }
                _ => update_nominal(&current, &batch, &weights, &cfg.bounds)?,
            };
            last_stats = Some((costs, weights));
        }
        let (costs, weights) = last_stats.expect("at least one iteration");

        let finite: Vec<f64> = costs.iter().map(|c| c.total).filter(|c| c.is_finite()).collect();
        let min_cost = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let mut mean_cost = finite.iter().sum::<f64>() / finite.len() as f64;
        let mut reported_min = min_cost;
        if cfg.baseline_subtraction {
            mean_cost -= min_cost;
            reported_min = 0.0;
        }
        let control = current.row(0).to_vec();
        let next_nominal = shift_horizon(&current, cfg.shift_fill)?;
        let diagnostics = StepDiagnostics {
            min_cost: reported_min,
            mean_cost,
            effective_sample_size: weights.effective_sample_size(),
            crashed_rollouts: costs.iter().filter(|c| c.crashed).count(),
            diverged_rollouts: costs.iter().filter(|c| c.diverged).count(),
            wall_time: start.elapsed(),
        };
        Ok(StepOutcome {
            control,
            next_nominal,
            updated_nominal: current,
            diagnostics,
        })
    }
}
