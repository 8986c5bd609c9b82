use std::path::PathBuf;

use mppi_core::bench::{
    aggregate, hover_nominal, run_experiment, run_trial, ExperimentConfig, ExperimentFile, MethodEntry, NamedTask,
    RunOptions,
};
use mppi_core::dynamics::{build_env, Status, TaskKind, TaskSpec};
use mppi_core::mppi::Controller;
use mppi_core::samplers::{seeded, SamplerKind};

fn shipped_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_repro.toml")
}

#[test]
fn shipped_config_resolves_to_fifteen_cells() {
    let file = ExperimentFile::load(&shipped_config()).unwrap();
    let cfg = file.resolve().unwrap();
    assert_eq!(cfg.tasks.len(), 3);
    assert_eq!(cfg.methods.len(), 5);
    assert_eq!(cfg.seeds, vec![1, 2, 3, 4, 5]);
    let labels: Vec<String> = cfg.methods.iter().map(MethodEntry::label).collect();
    assert_eq!(
        labels,
        [
            "Normal",
            "CubicSpline-k4",
            "CubicSpline-k8",
            "Bezier-cp4",
            "LinearInterp-w10"
        ]
    );
    for (task, kind) in cfg.tasks.iter().zip(TaskKind::ALL) {
        assert_eq!(task.spec, TaskSpec::default_for(kind), "{}", task.label);
    }
    // Every method section shares the budget written on the first one.
    for m in &cfg.methods {
        assert_eq!((m.rollouts, m.horizon, m.lambda), (64, 40, 1.0));
        assert_eq!(m.sigma, vec![0.25, 0.5]);
    }
}

#[test]
fn toml_round_trip_is_lossless() {
    let file = ExperimentFile::load(&shipped_config()).unwrap();
    assert_eq!(ExperimentFile::from_toml(&file.to_toml()).unwrap(), file);
}

#[test]
fn spline_controller_reaches_the_flat_goal() {
    let task = TaskSpec::default_for(TaskKind::Flat);
    let method = MethodEntry::new(SamplerKind::CubicSpline, 4)
        .to_mppi(&task.bounds)
        .unwrap();
    let rec = run_trial(&task, &method, 5, 1).unwrap();
    assert!(rec.success, "{rec:?}");
    assert!(!rec.crashed);
    assert_eq!(rec.iter_ms.len(), rec.steps);
}

#[test]
fn controller_steps_keep_controls_in_bounds() {
    let task = TaskSpec::default_for(TaskKind::BigBox);
    let env = build_env(task.clone()).unwrap();
    let cfg = MethodEntry::new(SamplerKind::Bezier, 4).to_mppi(&task.bounds).unwrap();
    let ctl = Controller::new(cfg).unwrap().with_threads(1).unwrap();
    let mut nominal = hover_nominal(&task, 40).unwrap();
    let mut state = env.initial_state();
    let mut rng = seeded(9);
    for _ in 0..60 {
        if state.status != Status::Running {
            break;
        }
        let out = ctl.control_step(&env, &state, &nominal, &mut rng).unwrap();
        for (j, u) in out.control.iter().enumerate() {
            assert!(*u >= task.bounds.lower()[j] && *u <= task.bounds.upper()[j]);
        }
        assert_eq!(out.next_nominal.horizon(), 40);
        nominal = out.next_nominal;
        state = env.step_dynamics(&state, &out.control).unwrap();
    }
}

#[test]
fn parallel_and_sequential_experiments_agree() {
    let mut file = ExperimentFile::from_toml(
        "trials_per_cell = 2\n[[task]]\nkind = \"big-box\"\nmax_steps = 80\n\
         [[method]]\nsampler = \"normal\"\nrollouts = 16\nhorizon = 20\n\
         [[method]]\nsampler = \"cubic-spline\"\nrollouts = 16\nhorizon = 20\n",
    )
    .unwrap();
    file.base_seed = 21;
    let cfg = file.resolve().unwrap();
    let key = |opts| {
        run_experiment(&cfg, opts)
            .unwrap()
            .into_iter()
            .map(|r| (r.task, r.method, r.trial, r.seed, r.success, r.steps, r.crashed))
            .collect::<Vec<_>>()
    };
    let seq = key(RunOptions {
        threads: 1,
        parallel_trials: false,
    });
    let par = key(RunOptions {
        threads: 3,
        parallel_trials: true,
    });
    assert_eq!(seq, par);
    assert_eq!(seq.len(), 4);
    assert_eq!(seq[0].1, "Normal");
    assert_eq!(seq[2].1, "CubicSpline-k4");
}

#[test]
fn broken_cells_become_failed_trials() {
    // Config built by hand so a cell that cannot run slips past `resolve`.
    let good = TaskSpec::default_for(TaskKind::Flat);
    let mut bad = good.clone();
    bad.dt = -1.0;
    let cfg = ExperimentConfig {
        tasks: vec![
            NamedTask {
                label: "broken".into(),
                spec: bad,
            },
            NamedTask {
                label: "flat".into(),
                spec: TaskSpec { max_steps: 5, ..good },
            },
        ],
        methods: vec![MethodEntry {
            rollouts: 8,
            horizon: 10,
            ..MethodEntry::default()
        }],
        seeds: vec![1, 2],
        output_path: "unused".into(),
    };
    let recs = run_experiment(&cfg, RunOptions::default()).unwrap();
    assert_eq!(recs.len(), 4);
    for r in &recs[..2] {
        assert!(!r.success && r.error.is_some());
        assert_eq!(r.steps, 800);
    }
    assert!(recs[2..].iter().all(|r| r.error.is_none() && r.steps == 5));
    let cells = aggregate(&recs).unwrap();
    assert_eq!(cells[0].success_pct, 0.0);
    assert_eq!(cells[1].trials, 2);
}
