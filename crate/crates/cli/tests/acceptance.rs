//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Criteria listed in
//! `KNOWN_UNATTAINABLE` are still measured and reported, but do not fail
//! the target; see the note on criterion 4 below.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mppi_core::bench::{aggregate, run_experiment, CellSummary, ExperimentFile, MethodEntry, RunOptions};
use mppi_core::dynamics::{build_env, TaskKind, TaskSpec};
use mppi_core::mppi::{importance_weights, update_nominal, Controller, WeightVector};
use mppi_core::samplers::{
    bernstein_basis, generate_batch, reconstruct_bezier, reconstruct_cubic_spline, reconstruct_linear, seeded,
    CountingSource, CubicSpline, KnotSet, NoiseSpec, SampleBatch, SamplerConfig, SamplerKind, SplineBoundary,
};
use mppi_core::trajectory::{smoothness_report, ActionBounds, ControlTrajectory};
use rand::Rng;

// Tolerances.
const NORMALIZATION_TOL: f64 = 1e-12;
const SHIFT_TOL: f64 = 1e-12;
const HOT_TOL: f64 = 1e-12;
const COLD_TOL: f64 = 1e-6;
const KNOT_TOL: f64 = 1e-9;
const HULL_TOL: f64 = 1e-12;
const PARTITION_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-9;
const SMOOTH_MIN_SEEDS: usize = 95;
const FLAT_MIN_SUCCESS: f64 = 90.0;
const STAIRS_MIN_GAP: f64 = 40.0;
const TIMING_ITERATIONS: usize = 600;

// Shared closed-loop budget for criteria 7-9.
const ROLLOUTS: usize = 64;
const HORIZON: usize = 40;
const SEEDS: u64 = 10;

/// Criterion 4 asks for cubic spline < linear interpolation in mean
/// absolute second difference. For the same knot values this cannot hold:
/// on every knot interval the spline's first differences average to the
/// chord slope, so their total variation is at least the sum of chord-slope
/// jumps, which is exactly the linear interpolant's value.
const KNOWN_UNATTAINABLE: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    importance_weights(costs, lambda).unwrap().as_slice().to_vec()
}

fn criterion_1() -> Outcome {
    let mut rng = seeded(1001);
    let mut worst = [0.0f64; 5];
    for _ in 0..1000 {
        let n = rng.random_range(2..=128);
        // Rollout-like magnitudes. One-hot at lambda = 1e-6 needs the best
        // two costs to differ by well over 1e-6 * ln(1e12) ~ 3e-5.
        let scale = 10f64.powf(rng.random_range(2.0..4.0));
        let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) * scale).collect();
        let lambda = 10f64.powf(rng.random_range(-1.0..2.0));

        let w = weights(&costs, lambda);
        worst[0] = worst[0].max((w.iter().sum::<f64>() - 1.0).abs());

        let offset = rng.random_range(-1e3..1e3);
        let shifted: Vec<f64> = costs.iter().map(|c| c + offset).collect();
        let ws = weights(&shifted, lambda);
        let shift_err = w.iter().zip(&ws).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst[1] = worst[1].max(shift_err);

        let flat = vec![costs[0]; n];
        let wu = weights(&flat, lambda);
        worst[2] = worst[2].max(wu.iter().map(|x| (x - 1.0 / n as f64).abs()).fold(0.0, f64::max));

        let best = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let hot = weights(&costs, 1e-6);
        let unique_min = costs.iter().filter(|&&c| c == costs[best]).count() == 1;
        if unique_min {
            worst[3] = worst[3].max((hot[best] - 1.0).abs());
        }

        let cold = weights(&costs, 1e9);
        worst[4] = worst[4].max(cold.iter().map(|x| (x - 1.0 / n as f64).abs()).fold(0.0, f64::max));
    }
    let pass = worst[0] <= NORMALIZATION_TOL
        && worst[1] <= SHIFT_TOL
        && worst[2] <= NORMALIZATION_TOL
        && worst[3] <= HOT_TOL
        && worst[4] <= COLD_TOL;
    outcome(
        pass,
        format!(
            "1000 vectors; max errors: sum {:.1e}, shift {:.1e}, equal {:.1e}, one-hot {:.1e}, uniform {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = seeded(2002);
    let mut knot_err: f64 = 0.0;
    let mut endpoint_exact = true;
    let mut hull_violation: f64 = 0.0;
    for _ in 0..1000 {
        let horizon = rng.random_range(8..=120);
        let k = rng.random_range(2..=horizon.min(16));
        let dim = rng.random_range(1..=3);
        let mut idx: Vec<usize> = vec![0];
        // Random strictly increasing indices ending at horizon - 1.
        let mut pool: Vec<usize> = (1..horizon - 1).collect();
        for i in 0..k - 2 {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut interior = pool[..k - 2].to_vec();
        interior.sort_unstable();
        idx.extend(interior);
        idx.push(horizon - 1);
        let values: Vec<f64> = (0..k * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let knots = KnotSet::new(idx.clone(), dim, values).unwrap();

        let spline = reconstruct_cubic_spline(&knots, horizon).unwrap();
        let linear = reconstruct_linear(&knots, horizon).unwrap();
        for (i, &t) in idx.iter().enumerate() {
            for j in 0..dim {
                let want = knots.row(i)[j];
                knot_err = knot_err
                    .max((spline.get(t, j) - want).abs())
                    .max((linear.get(t, j) - want).abs());
            }
        }

        let cp = rng.random_range(2..=horizon.min(16));
        let points: Vec<f64> = (0..cp * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let cps = KnotSet::new(mppi_core::samplers::uniform_indices(horizon, cp).unwrap(), dim, points).unwrap();
        let curve = reconstruct_bezier(&cps, horizon).unwrap();
        for j in 0..dim {
            endpoint_exact &= curve.get(0, j) == cps.row(0)[j];
            endpoint_exact &= curve.get(horizon - 1, j) == cps.row(cp - 1)[j];
            let col: Vec<f64> = (0..cp).map(|i| cps.row(i)[j]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for t in 0..horizon {
                let v = curve.get(t, j);
                hull_violation = hull_violation.max(lo - v).max(v - hi);
            }
        }
    }
    let mut partition_err: f64 = 0.0;
    for n in 0..=16u32 {
        for s in 0..100 {
            let tau = f64::from(s) / 99.0;
            let total: f64 = (0..=n).map(|i| bernstein_basis(n, i, tau).unwrap()).sum();
            partition_err = partition_err.max((total - 1.0).abs());
        }
    }
    let pass = knot_err <= KNOT_TOL && endpoint_exact && hull_violation <= HULL_TOL && partition_err <= PARTITION_TOL;
    outcome(
        pass,
        format!(
            "knot error {knot_err:.1e}, bezier endpoints exact: {endpoint_exact}, hull excess {:.1e}, partition error {partition_err:.1e}",
            hull_violation.max(0.0)
        ),
    )
}

fn criterion_3() -> Outcome {
    let (h, m, k, n) = (40usize, 2usize, 4usize, 64usize);
    let nominal = ControlTrajectory::zeros(h, m).unwrap();
    let bounds = ActionBounds::symmetric(m, 100.0).unwrap();
    let noise = NoiseSpec::isotropic(m, 1.0).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in SamplerKind::ALL {
        let cfg = SamplerConfig::new(kind, k, noise.clone());
        let mut src = CountingSource::new(seeded(3));
        generate_batch(&cfg, &nominal, &bounds, n, &mut src).unwrap();
        let expected = if kind.is_structured() { n * k * m } else { n * h * m };
        pass &= src.draws() == expected as u64;
        parts.push(format!("{} {}/{}", kind.as_str(), src.draws(), expected));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let (h, k) = (100usize, 4usize);
    let nominal = ControlTrajectory::zeros(h, 1).unwrap();
    let bounds = ActionBounds::symmetric(1, 1e6).unwrap();
    let noise = NoiseSpec::isotropic(1, 1.0).unwrap();
    let roughness = |kind: SamplerKind, seed: u64| {
        let cfg = SamplerConfig::new(kind, k, noise.clone());
        let batch = generate_batch(&cfg, &nominal, &bounds, 1, &mut seeded(seed)).unwrap();
        smoothness_report(&batch.trajectories[0]).unwrap().mean_abs_second_diff
    };
    let (mut spline_lt_linear, mut linear_lt_iid, mut both) = (0, 0, 0);
    for seed in 0..100 {
        let s = roughness(SamplerKind::CubicSpline, seed);
        let l = roughness(SamplerKind::LinearInterp, seed);
        let i = roughness(SamplerKind::IidGaussian, seed);
        spline_lt_linear += usize::from(s < l);
        linear_lt_iid += usize::from(l < i);
        both += usize::from(s < l && l < i);
    }
    outcome(
        both >= SMOOTH_MIN_SEEDS,
        format!(
            "spline<linear<iid in {both}/100 seeds (spline<linear {spline_lt_linear}, linear<iid {linear_lt_iid}; need {SMOOTH_MIN_SEEDS})"
        ),
    )
}

fn bench_once(config: &Path, out: &Path, threads: &str) -> String {
    let status = Command::new(env!("CARGO_BIN_EXE_mppi"))
        .args(["bench", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("MPPI_THREADS", threads)
        .output()
        .expect("mppi binary runs");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let mut trials = out.as_os_str().to_owned();
    trials.push(".trials.csv");
    let text = std::fs::read_to_string(PathBuf::from(trials)).unwrap();
    text.lines()
        .map(|l| l.split(',').take(6).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_5() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_repro.toml");
    let dir = tempfile::tempdir().unwrap();
    let a = bench_once(&config, &dir.path().join("a"), "1");
    let b = bench_once(&config, &dir.path().join("b"), "1");
    let c = bench_once(&config, &dir.path().join("c"), "4");
    let rows = a.lines().count() - 1;
    outcome(
        a == b && a == c,
        format!(
            "{rows} trial rows; repeat identical: {}, 1 vs 4 threads identical: {}",
            a == b,
            a == c
        ),
    )
}

fn criterion_6() -> Outcome {
    // Natural spline through (0,0), (1,1), (2,0): by hand M1 = -3 and the
    // value at 0.5 is 0.5 * (1 - M1/6) + M1 * 0.125 / 6 = 0.6875.
    let spline = CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], SplineBoundary::Natural).unwrap();
    let spline_err = (spline.eval(0.5) - 0.6875).abs();

    // Weighted-sum update against an explicit hand computation.
    let nominal = ControlTrajectory::from_rows(&[[1.0, -1.0], [0.5, 0.0], [0.0, 2.0]]).unwrap();
    let p = |rows: [[f64; 2]; 3]| ControlTrajectory::from_rows(&rows).unwrap();
    let perts = vec![
        p([[0.2, 0.0], [0.0, 0.4], [-1.0, 1.0]]),
        p([[-0.4, 1.0], [0.6, 0.0], [0.0, -2.0]]),
        p([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]),
    ];
    let w = [0.5, 0.25, 0.25];
    let batch = SampleBatch {
        trajectories: perts.clone(),
        perturbations: perts.clone(),
        knot_noise: None,
    };
    let bounds = ActionBounds::symmetric(2, 10.0).unwrap();
    let updated = update_nominal(&nominal, &batch, &WeightVector::try_from(w.to_vec()).unwrap(), &bounds).unwrap();
    let expected = [[1.25, -0.5], [0.9, 0.45], [-0.25, 2.25]];
    let mut update_err: f64 = 0.0;
    for (t, row) in expected.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            update_err = update_err.max((updated.get(t, j) - v).abs());
        }
    }

    // Semi-implicit Euler under a constant force from rest:
    //   v_n = n dt a,  p_n = p_0 + dt^2 a n (n + 1) / 2.
    let mut spec = TaskSpec::default_for(TaskKind::Flat);
    spec.goal_x = 1e6;
    let env = build_env(spec.clone()).unwrap();
    let mut state = mppi_core::dynamics::EnvState::at_rest(0.0, 5.0);
    let u = [0.7, 12.0];
    let n = 25usize;
    for _ in 0..n {
        state = env.step_dynamics(&state, &u).unwrap();
    }
    let dt = spec.dt;
    let a = [u[0], u[1] - 9.81];
    let nn = n as f64;
    let want_pos = [
        dt * dt * a[0] * nn * (nn + 1.0) / 2.0,
        5.0 + dt * dt * a[1] * nn * (nn + 1.0) / 2.0,
    ];
    let want_vel = [nn * dt * a[0], nn * dt * a[1]];
    let euler_err = (0..2)
        .map(|j| {
            (state.position[j] - want_pos[j])
                .abs()
                .max((state.velocity[j] - want_vel[j]).abs())
        })
        .fold(0.0, f64::max);

    outcome(
        spline_err <= ORACLE_TOL && update_err <= ORACLE_TOL && euler_err <= ORACLE_TOL,
        format!("spline {spline_err:.1e}, update {update_err:.1e}, euler {euler_err:.1e}"),
    )
}

/// Runs `methods` on one task over seeds 1..=SEEDS with the shared budget.
fn trend_cells(kind: TaskKind, methods: &[(SamplerKind, usize)]) -> Vec<CellSummary> {
    let file = ExperimentFile {
        trials_per_cell: SEEDS as usize,
        base_seed: 1,
        tasks: vec![mppi_core::bench::TaskEntry::from_spec(
            &TaskSpec::default_for(kind),
            false,
        )],
        methods: methods
            .iter()
            .map(|&(s, k)| MethodEntry {
                rollouts: ROLLOUTS,
                horizon: HORIZON,
                ..MethodEntry::new(s, k)
            })
            .collect(),
        ..ExperimentFile::default()
    };
    let config = file.resolve().unwrap();
    let records = run_experiment(
        &config,
        RunOptions {
            threads: 1,
            parallel_trials: true,
        },
    )
    .unwrap();
    aggregate(&records).unwrap()
}

fn describe(cells: &[CellSummary]) -> String {
    cells
        .iter()
        .map(|c| format!("{} {:.0}% / {:.1} steps", c.method, c.success_pct, c.steps_mean))
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_7() -> Outcome {
    let cells = trend_cells(
        TaskKind::Flat,
        &[(SamplerKind::IidGaussian, 4), (SamplerKind::CubicSpline, 4)],
    );
    let (iid, cs) = (&cells[0], &cells[1]);
    outcome(
        cs.success_pct >= FLAT_MIN_SUCCESS && cs.steps_mean < iid.steps_mean,
        describe(&cells),
    )
}

fn criterion_8() -> Outcome {
    let cells = trend_cells(
        TaskKind::Stairs,
        &[(SamplerKind::IidGaussian, 4), (SamplerKind::CubicSpline, 4)],
    );
    let gap = cells[1].success_pct - cells[0].success_pct;
    outcome(gap >= STAIRS_MIN_GAP, format!("{}; gap {gap:.0} pp", describe(&cells)))
}

fn criterion_9() -> Outcome {
    let cells = trend_cells(
        TaskKind::BigBox,
        &[
            (SamplerKind::IidGaussian, 4),
            (SamplerKind::CubicSpline, 4),
            (SamplerKind::LinearInterp, 10),
        ],
    );
    let cs = cells[1].success_pct;
    outcome(cs > cells[0].success_pct && cs > cells[2].success_pct, describe(&cells))
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    v[v.len() / 2]
}

fn criterion_10() -> Outcome {
    let spec = TaskSpec::default_for(TaskKind::Flat);
    let env = build_env(spec.clone()).unwrap();
    let k = 10;
    let make = |kind| {
        let cfg = MethodEntry {
            rollouts: ROLLOUTS,
            horizon: HORIZON,
            ..MethodEntry::new(kind, k)
        }
        .to_mppi(&spec.bounds)
        .unwrap();
        Controller::new(cfg).unwrap().with_threads(1).unwrap()
    };
    let controllers = [make(SamplerKind::LinearInterp), make(SamplerKind::CubicSpline)];
    let start = mppi_core::bench::hover_nominal(&spec, HORIZON).unwrap();
    let mut nominals = [start.clone(), start.clone()];
    let mut states = [env.initial_state(), env.initial_state()];
    let mut rngs = [seeded(10), seeded(10)];
    let mut times: [Vec<Duration>; 2] = [Vec::new(), Vec::new()];

    // Interleave the two methods so drift in machine load hits both alike.
    for _ in 0..TIMING_ITERATIONS {
        for i in 0..2 {
            let t0 = Instant::now();
            let out = controllers[i]
                .control_step(&env, &states[i], &nominals[i], &mut rngs[i])
                .unwrap();
            times[i].push(t0.elapsed());
            states[i] = env.step_dynamics(&states[i], &out.control).unwrap();
            nominals[i] = out.next_nominal;
            if states[i].status != mppi_core::dynamics::Status::Running {
                states[i] = env.initial_state();
                nominals[i] = start.clone();
            }
        }
    }
    let [lin, cs] = times.map(median);
    outcome(
        lin <= cs,
        format!(
            "median per iteration over {TIMING_ITERATIONS}: linear-interp {:.1} us, cubic-spline {:.1} us (K={k})",
            lin.as_secs_f64() * 1e6,
            cs.as_secs_f64() * 1e6
        ),
    )
}

fn main() {
    // Ignore libtest-style arguments such as --nocapture or filters.
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check); 10] = [
        (1, "weight correctness", criterion_1),
        (2, "interpolation identities", criterion_2),
        (3, "draw accounting", criterion_3),
        (4, "smoothness ordering", criterion_4),
        (5, "bench determinism", criterion_5),
        (6, "closed-form oracles", criterion_6),
        (7, "flat-task trend", criterion_7),
        (8, "stairs-task trend", criterion_8),
        (9, "box-task trend", criterion_9),
        (10, "interpolation cost trend", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let started = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        let note = if !result.pass && KNOWN_UNATTAINABLE.contains(&id) {
            " (known unattainable)"
        } else {
            ""
        };
        println!(
            "criterion {id:>2} {verdict}{note}: {name} -- {} [{:.1}s]",
            result.detail,
            started.elapsed().as_secs_f64()
        );
        if !result.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
