//! Planar point-mass environments standing in for flat-ground walking,
//! stair climbing and large-obstacle traversal.
//!
//! The body is a 1 kg point with state `[x, z, vx, vz]` driven by a thrust
//! vector `[Fx, Fz]` under gravity. It crashes the moment it drops below the
//! terrain and succeeds once it passes `goal_x` with a vertical speed under
//! the landing threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mppi::{Environment, DEFAULT_CRASH_PENALTY};
use crate::trajectory::ActionBounds;
use crate::{Error, Result};

pub const GRAVITY: f64 = -9.81;
pub const MASS: f64 = 1.0;

/// Piecewise-constant ground height. Each segment `(x_start, height)` holds
/// until the next segment starts; the first segment also extends to the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terrain {
    segments: Vec<(f64, f64)>,
}

impl Terrain {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("terrain needs at least one segment"));
        }
        if segments
            .iter()
            .any(|(x, h)| !x.is_finite() || !h.is_finite() || *h < 0.0)
        {
            return Err(Error::invalid(
                "terrain segments need finite starts and non-negative heights",
            ));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                "terrain segments must be sorted by start and not overlap",
            ));
        }
        Ok(Self { segments })
    }

    pub fn flat() -> Self {
        Self {
            segments: vec![(0.0, 0.0)],
        }
    }

    /// Four 0.15 m steps, one every 0.8 m.
    pub fn stairs() -> Self {
        Self {
            segments: vec![(0.0, 0.0), (0.8, 0.15), (1.6, 0.30), (2.4, 0.45), (3.2, 0.60)],
        }
    }

    /// A 0.4 m box over `x` in `[0.4, 0.6)`.
    pub fn big_box() -> Self {
        Self {
            segments: vec![(0.0, 0.0), (0.4, 0.4), (0.6, 0.0)],
        }
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Right-continuous height lookup.
    pub fn height(&self, x: f64) -> f64 {
        let idx = self.segments.partition_point(|(start, _)| *start <= x);
        self.segments[idx.saturating_sub(1)].1
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    /// Two-column `x h` table sampled on `[x_min, x_max]` for plotting, with
    /// both sides of every step included.
    pub fn to_table(&self, x_min: f64, x_max: f64) -> String {
        let mut out = String::from("# x h\n");
        out.push_str(&format!("{x_min} {}\n", self.height(x_min)));
        for (i, &(start, h)) in self.segments.iter().enumerate() {
            if start > x_min && start < x_max {
                let before = if i == 0 { h } else { self.segments[i - 1].1 };
                out.push_str(&format!("{start} {before}\n{start} {h}\n"));
            }
        }
        out.push_str(&format!("{x_max} {}\n", self.height(x_max)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Flat,
    Stairs,
    BigBox,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Flat, TaskKind::Stairs, TaskKind::BigBox];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Flat => "flat",
            TaskKind::Stairs => "stairs",
            TaskKind::BigBox => "big-box",
        }
    }

    pub fn terrain(self) -> Terrain {
        match self {
            TaskKind::Flat => Terrain::flat(),
            TaskKind::Stairs => Terrain::stairs(),
            TaskKind::BigBox => Terrain::big_box(),
        }
    }

    pub fn default_goal(self) -> f64 {
        match self {
            TaskKind::Flat | TaskKind::BigBox => 1.0,
            TaskKind::Stairs => 3.3,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown task '{s}' (valid tasks: flat, stairs, big-box)")))
    }
}

/// Weights of the running and terminal costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub goal: f64,
    pub clearance: f64,
    pub control: f64,
    /// Desired height above the terrain, meters.
    pub margin: f64,
    pub terminal: f64,
    /// Base of the crash penalty; the remaining horizon adds to it.
    pub crash: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            goal: 1.0,
            clearance: 10.0,
            control: 1e-3,
            margin: 0.05,
            terminal: 100.0,
            crash: DEFAULT_CRASH_PENALTY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub goal_x: f64,
    pub max_steps: usize,
    pub dt: f64,
    pub bounds: ActionBounds,
    pub weights: CostWeights,
    /// Largest |vz| at which crossing the goal counts as success.
    pub landing_speed: f64,
    /// Initial height above the terrain at x = 0.
    pub start_height: f64,
}

impl TaskSpec {
    pub fn default_for(kind: TaskKind) -> Self {
        Self {
            kind,
            goal_x: kind.default_goal(),
            max_steps: match kind {
                TaskKind::Flat => 800,
                TaskKind::Stairs => 1500,
                TaskKind::BigBox => 800,
            },
            dt: 0.02,
            bounds: default_bounds(),
            weights: CostWeights::default(),
            landing_speed: 1.0,
            start_height: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.goal_x.is_finite() && self.goal_x > 0.0) {
            return Err(Error::config(format!("goal_x must be positive, got {}", self.goal_x)));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.bounds.dim() != 2 {
            return Err(Error::config("planar tasks take two controls [Fx, Fz]"));
        }
        if self.landing_speed.is_nan()
            || self.landing_speed <= 0.0
            || self.start_height.is_nan()
            || self.start_height < 0.0
        {
            return Err(Error::config(
                "landing_speed must be positive and start_height non-negative",
            ));
        }
        Ok(())
    }
}

fn default_bounds() -> ActionBounds {
    ActionBounds::new(vec![-1.0, 0.0], vec![1.0, 15.0]).expect("static bounds")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    Crashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// `[x, z]`, meters.
    pub position: [f64; 2],
    /// `[vx, vz]`, m/s.
    pub velocity: [f64; 2],
    pub step_count: usize,
    pub status: Status,
}

impl EnvState {
    pub fn at_rest(x: f64, z: f64) -> Self {
        Self {
            position: [x, z],
            velocity: [0.0, 0.0],
            step_count: 0,
            status: Status::Running,
        }
    }
}

/// A task instantiated with its terrain.
#[derive(Debug, Clone)]
pub struct PlanarEnv {
    spec: TaskSpec,
    terrain: Terrain,
    max_running_cost: f64,
}

pub fn build_env(spec: TaskSpec) -> Result<PlanarEnv> {
    spec.validate()?;
    let terrain = spec.kind.terrain();
    let w = &spec.weights;
    let control_sq: f64 = spec
        .bounds
        .lower()
        .iter()
        .zip(spec.bounds.upper())
        .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
        .sum();
    let max_running_cost =
        w.goal * spec.goal_x.powi(2) + w.clearance * (terrain.max_height() + w.margin).powi(2) + w.control * control_sq;
    Ok(PlanarEnv {
        spec,
        terrain,
        max_running_cost,
    })
}

impl PlanarEnv {
    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn terrain(&self) -> &Terrain {
        &self.terrain
    }

    pub fn initial_state(&self) -> EnvState {
        EnvState::at_rest(0.0, self.terrain.height(0.0) + self.spec.start_height)
    }

    /// Thrust that exactly cancels gravity.
    pub fn hover_control(&self) -> [f64; 2] {
        [0.0, -MASS * GRAVITY]
    }

    /// Semi-implicit Euler step followed by the crash and success checks.
    /// Terminal states are returned unchanged.
    pub fn step_dynamics(&self, state: &EnvState, control: &[f64]) -> Result<EnvState> {
        if control.len() != 2 {
            return Err(Error::DimensionMismatch {
                context: "step_dynamics control",
                expected: 2,
                actual: control.len(),
            });
        }
        if control.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite("control"));
        }
        Ok(self.advance(state, control))
    }

    fn advance(&self, state: &EnvState, control: &[f64]) -> EnvState {
        if state.status != Status::Running {
            return state.clone();
        }
        let dt = self.spec.dt;
        let vx = state.velocity[0] + dt * control[0] / MASS;
        let vz = state.velocity[1] + dt * (control[1] / MASS + GRAVITY);
        let x = state.position[0] + dt * vx;
        let z = state.position[1] + dt * vz;
        let status = if z < self.terrain.height(x) {
            Status::Crashed
        } else if x >= self.spec.goal_x && vz.abs() < self.spec.landing_speed {
            Status::Success
        } else {
            Status::Running
        };
        EnvState {
            position: [x, z],
            velocity: [vx, vz],
            step_count: state.step_count + 1,
            status,
        }
    }

    pub fn is_success(&self, state: &EnvState) -> bool {
        state.position[0] >= self.spec.goal_x && state.velocity[1].abs() < self.spec.landing_speed
    }

    /// Goal distance, terrain clearance and control effort.
    pub fn running_cost(&self, state: &EnvState, control: &[f64]) -> f64 {
        let w = &self.spec.weights;
        let [x, z] = state.position;
        let behind = (self.spec.goal_x - x).max(0.0);
        let low = (self.terrain.height(x) + w.margin - z).max(0.0);
        let effort: f64 = control.iter().map(|u| u * u).sum();
        w.goal * behind * behind + w.clearance * low * low + w.control * effort
    }

    pub fn terminal_cost(&self, state: &EnvState) -> f64 {
        let behind = (self.spec.goal_x - state.position[0]).max(0.0);
        self.spec.weights.terminal * behind * behind
    }
}

impl Environment for PlanarEnv {
    type State = EnvState;

    fn action_dim(&self) -> usize {
        2
    }

    fn step(&self, state: &EnvState, control: &[f64]) -> EnvState {
        self.advance(state, control)
    }

    fn running_cost(&self, state: &EnvState, control: &[f64]) -> f64 {
        PlanarEnv::running_cost(self, state, control)
    }

    fn terminal_cost(&self, state: &EnvState) -> f64 {
        PlanarEnv::terminal_cost(self, state)
    }

    fn is_crashed(&self, state: &EnvState) -> bool {
        state.status == Status::Crashed
    }

    fn is_finite(&self, state: &EnvState) -> bool {
        state.position.iter().chain(&state.velocity).all(|v| v.is_finite())
    }

    fn crash_penalty(&self, remaining_steps: usize) -> f64 {
        self.spec.weights.crash + remaining_steps as f64 * self.max_running_cost
    }
}
