use super::KnotSet;
use crate::trajectory::ControlTrajectory;
use crate::Result;

/// Segment lookup for piecewise-linear interpolation over integer steps.
pub(crate) struct LinearPlan {
    // (left waypoint, weight on the right waypoint) per time step.
    stencil: Vec<(usize, f64)>,
}

impl LinearPlan {
    pub(crate) fn new(indices: &[usize], horizon: usize) -> Self {
        let last = indices.len() - 2;
        let stencil = (0..horizon)
            .map(|t| {
                let seg = indices[1..=last].partition_point(|&k| k <= t);
                let (a, b) = (indices[seg], indices[seg + 1]);
                (seg, (t - a) as f64 / (b - a) as f64)
            })
            .collect();
        Self { stencil }
    }

    pub(crate) fn reconstruct_into(&self, waypoint_values: &[f64], dim: usize, out: &mut [f64]) {
        for (t, &(seg, w)) in self.stencil.iter().enumerate() {
            let left = &waypoint_values[seg * dim..(seg + 1) * dim];
            let right = &waypoint_values[(seg + 1) * dim..(seg + 2) * dim];
            let row = &mut out[t * dim..(t + 1) * dim];
            for j in 0..dim {
                row[j] = if w == 0.0 {
                    left[j]
                } else {
                    left[j] + w * (right[j] - left[j])
                };
            }
        }
    }
}

/// Straight-line segments between consecutive waypoints, evaluated at every
/// integer step of the horizon.
pub fn reconstruct_linear(waypoints: &KnotSet, horizon: usize) -> Result<ControlTrajectory> {
    waypoints.check_span(horizon)?;
    let plan = LinearPlan::new(waypoints.indices(), horizon);
    let mut out = vec![0.0; horizon * waypoints.dim()];
    plan.reconstruct_into(waypoints.values(), waypoints.dim(), &mut out);
    ControlTrajectory::from_vec(horizon, waypoints.dim(), out)
}
