//! Cubic spline interpolation through knot values.

use serde::{Deserialize, Serialize};

use super::KnotSet;
use crate::trajectory::ControlTrajectory;
use crate::{Error, Result};

/// End conditions for the interpolating cubic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplineBoundary {
    /// Zero second derivative at both ends.
    #[default]
    Natural,
    /// Zero first derivative at both ends.
    ClampedZeroSlope,
}

/// A one-dimensional interpolating cubic spline, evaluable anywhere in its
/// knot range.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // Second derivatives at the knots.
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64], boundary: SplineBoundary) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                context: "spline knots",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::invalid("a cubic spline needs at least 2 knots"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline knot positions must be strictly increasing"));
        }
        let widths: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut moments = vec![0.0; xs.len()];
        let mut scratch = vec![0.0; xs.len()];
        solve_moments(&widths, ys, boundary, &mut moments, &mut scratch);
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            moments,
        })
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.moments
    }

    /// Evaluates the spline at `x`, extrapolating with the end cubics
    /// outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.xs.len() - 2;
        let seg = self.xs[1..=last].partition_point(|&k| k <= x);
        eval_segment(&self.xs, &self.ys, &self.moments, seg, x)
    }
}

#[inline]
fn eval_segment(xs: &[f64], ys: &[f64], moments: &[f64], seg: usize, x: f64) -> f64 {
    let h = xs[seg + 1] - xs[seg];
    let a = (xs[seg + 1] - x) / h;
    let b = (x - xs[seg]) / h;
    a * ys[seg] + b * ys[seg + 1] + ((a * a * a - a) * moments[seg] + (b * b * b - b) * moments[seg + 1]) * h * h / 6.0
}

/// Solves the tridiagonal system for the knot second derivatives with the
/// Thomas algorithm. `widths[i] = x[i+1] - x[i]`.
fn solve_moments(widths: &[f64], ys: &[f64], boundary: SplineBoundary, moments: &mut [f64], scratch: &mut [f64]) {
    let n = ys.len();
    let slope = |i: usize| (ys[i + 1] - ys[i]) / widths[i];

    // Row i: sub[i] * M[i-1] + diag[i] * M[i] + sup[i] * M[i+1] = rhs[i].
    // Forward sweep keeps the modified super-diagonal in `scratch` and the
    // modified rhs in `moments`.
    let row = |i: usize| -> (f64, f64, f64, f64) {
        if i == 0 {
            match boundary {
                SplineBoundary::Natural => (0.0, 1.0, 0.0, 0.0),
                SplineBoundary::ClampedZeroSlope => (0.0, 2.0 * widths[0], widths[0], 6.0 * slope(0)),
            }
        } else if i == n - 1 {
            match boundary {
                SplineBoundary::Natural => (0.0, 1.0, 0.0, 0.0),
                SplineBoundary::ClampedZeroSlope => {
                    let h = widths[n - 2];
                    (h, 2.0 * h, 0.0, -6.0 * slope(n - 2))
                }
            }
        } else {
            let (hl, hr) = (widths[i - 1], widths[i]);
            (hl, 2.0 * (hl + hr), hr, 6.0 * (slope(i) - slope(i - 1)))
        }
    };

    let (_, d0, s0, r0) = row(0);
    scratch[0] = s0 / d0;
    moments[0] = r0 / d0;
    for i in 1..n {
        let (sub, diag, sup, rhs) = row(i);
        let denom = diag - sub * scratch[i - 1];
        scratch[i] = sup / denom;
        moments[i] = (rhs - sub * moments[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        moments[i] -= scratch[i] * moments[i + 1];
    }
}

/// Per-batch workspace for spline reconstruction over a fixed knot layout.
pub(crate) struct SplinePlan {
    xs: Vec<f64>,
    widths: Vec<f64>,
    boundary: SplineBoundary,
    // Segment index used for each integer time step.
    segment_of: Vec<usize>,
}

impl SplinePlan {
    pub(crate) fn new(indices: &[usize], horizon: usize, boundary: SplineBoundary) -> Self {
        let xs: Vec<f64> = indices.iter().map(|&i| i as f64).collect();
        let widths = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let last = indices.len() - 2;
        let segment_of = (0..horizon)
            .map(|t| indices[1..=last].partition_point(|&k| k <= t))
            .collect();
        Self {
            xs,
            widths,
            boundary,
            segment_of,
        }
    }

    /// Writes the dense `H x m` reconstruction of row-major `knot_values`.
    pub(crate) fn reconstruct_into(&self, knot_values: &[f64], dim: usize, out: &mut [f64]) {
        let k = self.xs.len();
        let mut ys = vec![0.0; k];
        let mut moments = vec![0.0; k];
        let mut scratch = vec![0.0; k];
        for j in 0..dim {
            for (i, y) in ys.iter_mut().enumerate() {
                *y = knot_values[i * dim + j];
            }
            solve_moments(&self.widths, &ys, self.boundary, &mut moments, &mut scratch);
            for (t, &seg) in self.segment_of.iter().enumerate() {
                out[t * dim + j] = eval_segment(&self.xs, &ys, &moments, seg, t as f64);
            }
        }
    }
}

/// Dense reconstruction through every knot with a natural cubic spline per
/// action dimension.
pub fn reconstruct_cubic_spline(knots: &KnotSet, horizon: usize) -> Result<ControlTrajectory> {
    reconstruct_cubic_spline_with(knots, horizon, SplineBoundary::Natural)
}

pub fn reconstruct_cubic_spline_with(
    knots: &KnotSet,
    horizon: usize,
    boundary: SplineBoundary,
) -> Result<ControlTrajectory> {
    knots.check_span(horizon)?;
    let plan = SplinePlan::new(knots.indices(), horizon, boundary);
    let mut out = vec![0.0; horizon * knots.dim()];
    plan.reconstruct_into(knots.values(), knots.dim(), &mut out);
    ControlTrajectory::from_vec(horizon, knots.dim(), out)
}
