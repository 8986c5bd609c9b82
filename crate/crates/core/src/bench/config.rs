//! TOML experiment files.
//!
//! ```toml
//! trials_per_cell = 5
//! base_seed = 1            # trial i uses base_seed + i, unless `seeds` is given
//! output = "results/run"
//!
//! [[task]]
//! kind = "stairs"          # flat | stairs | big-box
//! max_steps = 1500
//!
//! [[method]]
//! label = "CubicSpline-k4"
//! sampler = "cubic-spline" # normal | cubic-spline | bezier | linear-interp
//! k = 4
//! ```
//!
//! Every omitted field takes the default shown by [`TaskEntry::default`] and
//! [`MethodEntry::default`].

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CostWeights, TaskKind, TaskSpec};
use crate::mppi::{MppiConfig, UpdateSpace};
use crate::samplers::{NoiseSpec, SamplerConfig, SamplerKind, SplineBoundary};
use crate::trajectory::{ActionBounds, ShiftFill};
use crate::{Error, Result};

/// One task section of the experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskEntry {
    pub kind: TaskKind,
    /// Row label in the output; defaults to the kind name.
    pub label: Option<String>,
    pub goal_x: Option<f64>,
    pub max_steps: Option<usize>,
    pub dt: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub landing_speed: f64,
    pub start_height: f64,
    pub weights: CostWeights,
}

impl Default for TaskEntry {
    fn default() -> Self {
        Self::from_spec(&TaskSpec::default_for(TaskKind::Flat), false)
    }
}

impl TaskEntry {
    /// Entry reproducing `spec`. Goal and step cap are written out only
    /// when `explicit` is set; otherwise they follow the kind's defaults.
    pub fn from_spec(spec: &TaskSpec, explicit: bool) -> Self {
        Self {
            kind: spec.kind,
            label: None,
            goal_x: explicit.then_some(spec.goal_x),
            max_steps: explicit.then_some(spec.max_steps),
            dt: spec.dt,
            lower: spec.bounds.lower().to_vec(),
            upper: spec.bounds.upper().to_vec(),
            landing_speed: spec.landing_speed,
            start_height: spec.start_height,
            weights: spec.weights,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.as_str().to_owned())
    }

    pub fn to_spec(&self) -> Result<TaskSpec> {
        let defaults = TaskSpec::default_for(self.kind);
        let spec = TaskSpec {
            kind: self.kind,
            goal_x: self.goal_x.unwrap_or(defaults.goal_x),
            max_steps: self.max_steps.unwrap_or(defaults.max_steps),
            dt: self.dt,
            bounds: ActionBounds::new(self.lower.clone(), self.upper.clone())?,
            weights: self.weights,
            landing_speed: self.landing_speed,
            start_height: self.start_height,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One method section of the experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodEntry {
    pub label: Option<String>,
    pub sampler: SamplerKind,
    pub k: usize,
    pub sigma: Vec<f64>,
    pub rollouts: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub boundary: SplineBoundary,
    pub preserve_nominal: bool,
    pub iterations_per_step: usize,
    pub update_space: UpdateSpace,
    pub shift_fill: ShiftFill,
    pub baseline_subtraction: bool,
}

impl Default for MethodEntry {
    fn default() -> Self {
        Self {
            label: None,
            sampler: SamplerKind::CubicSpline,
            k: 4,
            sigma: vec![0.25, 0.5],
            rollouts: 64,
            horizon: 40,
            lambda: 1.0,
            boundary: SplineBoundary::Natural,
            preserve_nominal: false,
            iterations_per_step: 1,
            update_space: UpdateSpace::Dense,
            shift_fill: ShiftFill::RepeatLast,
            baseline_subtraction: true,
        }
    }
}

impl MethodEntry {
    pub fn new(sampler: SamplerKind, k: usize) -> Self {
        Self {
            sampler,
            k,
            ..Self::default()
        }
    }

    /// `Normal`, `CubicSpline-k4`, `Bezier-cp4` or `LinearInterp-w10` style labels.
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match self.sampler {
            SamplerKind::IidGaussian => "Normal".to_owned(),
            SamplerKind::CubicSpline => format!("CubicSpline-k{}", self.k),
            SamplerKind::Bezier => format!("Bezier-cp{}", self.k),
            SamplerKind::LinearInterp => format!("LinearInterp-w{}", self.k),
        })
    }

    /// Controller configuration for a task with the given actuator bounds.
    pub fn to_mppi(&self, bounds: &ActionBounds) -> Result<MppiConfig> {
        let sigma = if self.sigma.len() == 1 {
            vec![self.sigma[0]; bounds.dim()]
        } else {
            self.sigma.clone()
        };
        let mut sampler = SamplerConfig::new(self.sampler, self.k, NoiseSpec::new(sigma)?);
        sampler.boundary = self.boundary;
        sampler.preserve_nominal = self.preserve_nominal;
        let config = MppiConfig {
            horizon: self.horizon,
            rollouts: self.rollouts,
            lambda: self.lambda,
            sampler,
            bounds: bounds.clone(),
            baseline_subtraction: self.baseline_subtraction,
            iterations_per_step: self.iterations_per_step,
            update_space: self.update_space,
            shift_fill: self.shift_fill,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Raw experiment file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFile {
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub seeds: Option<Vec<u64>>,
    pub output: PathBuf,
    #[serde(rename = "task")]
    pub tasks: Vec<TaskEntry>,
    #[serde(rename = "method")]
    pub methods: Vec<MethodEntry>,
}

impl Default for ExperimentFile {
    fn default() -> Self {
        Self {
            trials_per_cell: 5,
            base_seed: 1,
            seeds: None,
            output: PathBuf::from("results/mppi"),
            tasks: TaskKind::ALL
                .iter()
                .map(|&kind| TaskEntry {
                    kind,
                    ..TaskEntry::default()
                })
                .collect(),
            methods: vec![MethodEntry::default()],
        }
    }
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment files always serialize")
    }

    /// The five methods compared on every task, under shared budgets.
    pub fn compared_methods() -> Vec<MethodEntry> {
        vec![
            MethodEntry::new(SamplerKind::IidGaussian, 4),
            MethodEntry::new(SamplerKind::CubicSpline, 4),
            MethodEntry::new(SamplerKind::CubicSpline, 8),
            MethodEntry::new(SamplerKind::Bezier, 4),
            MethodEntry::new(SamplerKind::LinearInterp, 10),
        ]
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        if self.trials_per_cell < 1 {
            return Err(Error::config("trials_per_cell must be >= 1"));
        }
        if self.tasks.is_empty() || self.methods.is_empty() {
            return Err(Error::config("an experiment needs at least one task and one method"));
        }
        let seeds = match &self.seeds {
            Some(list) => {
                if list.len() < self.trials_per_cell {
                    return Err(Error::config(format!(
                        "{} seeds listed for {} trials per cell",
                        list.len(),
                        self.trials_per_cell
                    )));
                }
                list[..self.trials_per_cell].to_vec()
            }
            None => (0..self.trials_per_cell as u64).map(|i| self.base_seed + i).collect(),
        };

        let mut tasks = Vec::with_capacity(self.tasks.len());
        let mut seen = HashSet::new();
        for entry in &self.tasks {
            let label = entry.label();
            if !seen.insert(label.clone()) {
                return Err(Error::config(format!("duplicate task label '{label}'")));
            }
            tasks.push(NamedTask {
                label,
                spec: entry.to_spec()?,
            });
        }
        let mut seen = HashSet::new();
        for entry in &self.methods {
            let label = entry.label();
            if !seen.insert(label.clone()) {
                return Err(Error::config(format!("duplicate method label '{label}'")));
            }
            // Fail early on methods that cannot run on some task.
            for task in &tasks {
                entry
                    .to_mppi(&task.spec.bounds)
                    .map_err(|e| Error::config(format!("method '{label}' on task '{}': {e}", task.label)))?;
            }
        }
        Ok(ExperimentConfig {
            tasks,
            methods: self.methods.clone(),
            seeds,
            output_path: self.output.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTask {
    pub label: String,
    pub spec: TaskSpec,
}

/// A validated experiment: every (task, method) cell runs once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tasks: Vec<NamedTask>,
    pub methods: Vec<MethodEntry>,
    pub seeds: Vec<u64>,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn trials_per_cell(&self) -> usize {
        self.seeds.len()
    }
}
