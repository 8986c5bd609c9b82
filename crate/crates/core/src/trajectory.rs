//! Dense control trajectories and the operations every sampler shares.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A dense `H x m` control sequence stored time-major: row `t` is the
/// control vector applied at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    values: Vec<f64>,
    horizon: usize,
    dim: usize,
}

impl ControlTrajectory {
    /// Builds a trajectory from row-major values. Requires `horizon >= 2`,
    /// `dim >= 1` and finite entries.
    pub fn from_vec(horizon: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::invalid(format!("horizon must be >= 2, got {horizon}")));
        }
        if dim < 1 {
            return Err(Error::invalid("action dimension must be >= 1"));
        }
        if values.len() != horizon * dim {
            return Err(Error::DimensionMismatch {
                context: "trajectory values",
                expected: horizon * dim,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory values"));
        }
        Ok(Self { values, horizon, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "trajectory row",
                    expected: dim,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), dim, values)
    }

    /// The same control vector repeated over the whole horizon.
    pub fn constant(horizon: usize, row: &[f64]) -> Result<Self> {
        let values = row.iter().copied().cycle().take(horizon * row.len()).collect();
        Self::from_vec(horizon, row.len(), values)
    }

    pub fn zeros(horizon: usize, dim: usize) -> Result<Self> {
        Self::from_vec(horizon, dim, vec![0.0; horizon * dim])
    }

    /// Internal constructor for values already known to be well-formed.
    pub(crate) fn from_parts_unchecked(horizon: usize, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), horizon * dim);
        Self { values, horizon, dim }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.dim + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Element-wise actuator limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("bounds must cover at least one action dimension"));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bounds"));
        }
        if let Some(j) = (0..lower.len()).find(|&j| lower[j] >= upper[j]) {
            return Err(Error::invalid(format!(
                "bounds for dimension {j} are empty: lower {} >= upper {}",
                lower[j], upper[j]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Symmetric bounds `[-limit, limit]` in every one of `dim` dimensions.
    pub fn symmetric(dim: usize, limit: f64) -> Result<Self> {
        Self::new(vec![-limit; dim], vec![limit; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clip_row(&self, row: &mut [f64]) {
        for ((v, lo), hi) in row.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = clip_scalar(*v, *lo, *hi);
        }
    }

    pub(crate) fn clip_values(&self, values: &mut [f64]) {
        for row in values.chunks_exact_mut(self.dim()) {
            self.clip_row(row);
        }
    }
}

// Written out instead of f64::clamp so in-range values are returned untouched.
#[inline]
fn clip_scalar(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Tail policy for [`shift_horizon`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftFill {
    #[default]
    RepeatLast,
    Zero,
}

/// Saturates every entry of `traj` into `bounds`.
pub fn clip_trajectory(traj: &ControlTrajectory, bounds: &ActionBounds) -> Result<ControlTrajectory> {
    if traj.dim() != bounds.dim() {
        return Err(Error::DimensionMismatch {
            context: "clip_trajectory",
            expected: bounds.dim(),
            actual: traj.dim(),
        });
    }
    let mut values = traj.values.clone();
    bounds.clip_values(&mut values);
    Ok(ControlTrajectory::from_parts_unchecked(traj.horizon, traj.dim, values))
}

/// Drops the executed first row and fills the freed last row.
pub fn shift_horizon(traj: &ControlTrajectory, fill: ShiftFill) -> Result<ControlTrajectory> {
    let (h, m) = (traj.horizon, traj.dim);
    if h < 2 {
        return Err(Error::invalid("shift_horizon needs a horizon of at least 2"));
    }
    let mut values = Vec::with_capacity(h * m);
    values.extend_from_slice(&traj.values[m..]);
    match fill {
        ShiftFill::RepeatLast => values.extend_from_slice(traj.row(h - 1)),
        ShiftFill::Zero => values.extend(std::iter::repeat_n(0.0, m)),
    }
    Ok(ControlTrajectory::from_parts_unchecked(h, m, values))
}

/// Finite-difference smoothness measures along the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    pub max_first_diff: f64,
    pub max_second_diff: f64,
    pub mean_abs_second_diff: f64,
}

pub fn smoothness_report(traj: &ControlTrajectory) -> Result<SmoothnessReport> {
    let (h, m) = (traj.horizon, traj.dim);
    if h < 3 {
        return Err(Error::invalid("smoothness_report needs a horizon of at least 3"));
    }
    let mut max_first: f64 = 0.0;
    for t in 0..h - 1 {
        for j in 0..m {
            max_first = max_first.max((traj.get(t + 1, j) - traj.get(t, j)).abs());
        }
    }
    let mut max_second: f64 = 0.0;
    let mut sum_second = 0.0;
    for t in 0..h - 2 {
        for j in 0..m {
            let d2 = (traj.get(t + 2, j) - 2.0 * traj.get(t + 1, j) + traj.get(t, j)).abs();
            max_second = max_second.max(d2);
            sum_second += d2;
        }
    }
    Ok(SmoothnessReport {
        max_first_diff: max_first,
        max_second_diff: max_second,
        mean_abs_second_diff: sum_second / ((h - 2) * m) as f64,
    })
}
