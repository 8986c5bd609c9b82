use mppi_core::samplers::{
    generate_batch, reconstruct_cubic_spline, reconstruct_linear, seeded, uniform_indices, KnotSet, NoiseSpec,
    SamplerConfig, SamplerKind,
};
use mppi_core::trajectory::{smoothness_report, ActionBounds, ControlTrajectory};
use proptest::prelude::*;

fn total_abs_second_diff(t: &ControlTrajectory) -> f64 {
    let r = smoothness_report(t).unwrap();
    r.mean_abs_second_diff * ((t.horizon() - 2) * t.dim()) as f64
}

proptest! {
    // Through the same knots, the spline's first differences must reach
    // every chord slope, so its slope variation can never undercut the
    // piecewise-linear interpolant, which jumps straight between them.
    #[test]
    fn spline_curvature_never_below_linear(
        values in prop::collection::vec(-10.0f64..10.0, 4..=8),
        horizon in 20usize..200,
    ) {
        let idx = uniform_indices(horizon, values.len()).unwrap();
        let knots = KnotSet::new(idx, 1, values).unwrap();
        let spline = total_abs_second_diff(&reconstruct_cubic_spline(&knots, horizon).unwrap());
        let linear = total_abs_second_diff(&reconstruct_linear(&knots, horizon).unwrap());
        prop_assert!(spline >= linear - 1e-9 * (1.0 + linear), "spline {spline} < linear {linear}");
    }

    #[test]
    fn linear_roughness_is_the_sum_of_slope_jumps(
        values in prop::collection::vec(-10.0f64..10.0, 2..=10),
        horizon in 30usize..150,
    ) {
        let idx = uniform_indices(horizon, values.len()).unwrap();
        let slopes: Vec<f64> = idx
            .windows(2)
            .zip(values.windows(2))
            .map(|(i, v)| (v[1] - v[0]) / (i[1] - i[0]) as f64)
            .collect();
        let expected: f64 = slopes.windows(2).map(|s| (s[1] - s[0]).abs()).sum();
        let knots = KnotSet::new(idx, 1, values).unwrap();
        let got = total_abs_second_diff(&reconstruct_linear(&knots, horizon).unwrap());
        prop_assert!((got - expected).abs() <= 1e-9 * (1.0 + expected));
    }
}

#[test]
fn structured_noise_is_far_smoother_than_iid() {
    let nominal = ControlTrajectory::zeros(100, 2).unwrap();
    let bounds = ActionBounds::symmetric(2, 1e6).unwrap();
    let noise = NoiseSpec::isotropic(2, 1.0).unwrap();
    for seed in 0..50 {
        let rough = |kind| {
            let cfg = SamplerConfig::new(kind, 4, noise.clone());
            let b = generate_batch(&cfg, &nominal, &bounds, 1, &mut seeded(seed)).unwrap();
            smoothness_report(&b.trajectories[0]).unwrap().mean_abs_second_diff
        };
        let iid = rough(SamplerKind::IidGaussian);
        for kind in [SamplerKind::CubicSpline, SamplerKind::LinearInterp, SamplerKind::Bezier] {
            assert!(rough(kind) * 10.0 < iid, "seed {seed}: {kind:?}");
        }
    }
}
