//! Command-line flags layered over an experiment file. A flag always wins
//! over the file; the file wins over built-in defaults.

use std::path::PathBuf;

use mppi_core::bench::{ExperimentFile, MethodEntry, TaskEntry};
use mppi_core::dynamics::{TaskKind, TaskSpec};
use mppi_core::samplers::SamplerKind;

use crate::{CommonFlags, Failure};

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<TaskKind>,
    pub sampler: Option<SamplerKind>,
    pub k: Option<usize>,
    pub rollouts: Option<usize>,
    pub horizon: Option<usize>,
    pub lambda: Option<f64>,
    pub sigma: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
}

impl From<&CommonFlags> for Overrides {
    fn from(f: &CommonFlags) -> Self {
        Self {
            task: f.task,
            sampler: f.sampler,
            k: f.k,
            rollouts: f.rollouts,
            horizon: f.horizon,
            lambda: f.lambda,
            sigma: f.sigma.clone(),
            seed: f.seed,
            max_steps: f.max_steps,
        }
    }
}

/// Everything `run` needs for one trial.
#[derive(Debug, Clone)]
pub struct SingleTrial {
    pub task_label: String,
    pub task: TaskSpec,
    pub method: MethodEntry,
    pub seed: u64,
}

impl Overrides {
    /// Applies the flags to `file`. Without a file the experiment covers all
    /// three tasks with the five compared methods.
    ///
    /// `--task` keeps only that task's sections (adding a default one if the
    /// file has none); `--sampler` replaces the method list with a single
    /// method built on the first section; the remaining method flags apply
    /// to every method.
    pub fn experiment(
        &self,
        file: Option<ExperimentFile>,
        trials: Option<usize>,
        out: Option<PathBuf>,
    ) -> ExperimentFile {
        let mut file = file.unwrap_or_else(|| ExperimentFile {
            methods: ExperimentFile::compared_methods(),
            ..ExperimentFile::default()
        });
        self.apply(&mut file);
        if let Some(n) = trials {
            file.trials_per_cell = n;
        }
        if let Some(out) = out {
            file.output = out;
        }
        file
    }

    /// Picks the single (task, method, seed) for `run`: the first task and
    /// method section after overrides, and the first seed.
    pub fn single_trial(&self, file: Option<ExperimentFile>) -> Result<SingleTrial, Failure> {
        let mut file = file.unwrap_or_default();
        self.apply(&mut file);
        file.trials_per_cell = 1;
        let config = file.resolve()?;
        let task = config.tasks.into_iter().next().expect("resolve guarantees a task");
        let method = config.methods.into_iter().next().expect("resolve guarantees a method");
        Ok(SingleTrial {
            task_label: task.label,
            task: task.spec,
            method,
            seed: config.seeds[0],
        })
    }

    fn apply(&self, file: &mut ExperimentFile) {
        if let Some(kind) = self.task {
            file.tasks.retain(|t| t.kind == kind);
            if file.tasks.is_empty() {
                file.tasks
                    .push(TaskEntry::from_spec(&TaskSpec::default_for(kind), false));
            }
        }
        if let Some(n) = self.max_steps {
            for t in &mut file.tasks {
                t.max_steps = Some(n);
            }
        }
        if let Some(sampler) = self.sampler {
            let template = file.methods.first().cloned().unwrap_or_default();
            file.methods = vec![MethodEntry {
                label: None,
                sampler,
                ..template
            }];
        }
        for m in &mut file.methods {
            if let Some(k) = self.k {
                m.k = k;
            }
            if let Some(n) = self.rollouts {
                m.rollouts = n;
            }
            if let Some(h) = self.horizon {
                m.horizon = h;
            }
            if let Some(l) = self.lambda {
                m.lambda = l;
            }
            if let Some(s) = &self.sigma {
                m.sigma = s.clone();
            }
        }
        if let Some(seed) = self.seed {
            file.base_seed = seed;
            file.seeds = None;
        }
    }
}
