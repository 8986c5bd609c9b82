//! Bézier reconstruction from control points in the Bernstein basis.

use super::KnotSet;
use crate::trajectory::ControlTrajectory;
use crate::{Error, Result};

/// Binomial coefficient by the multiplicative formula. Every partial
/// product is itself a binomial coefficient, so the division is exact.
fn binomial(n: u32, i: u32) -> f64 {
    let i = i.min(n - i);
    let mut acc: u64 = 1;
    for step in 1..=u64::from(i) {
        acc = acc * (u64::from(n - i) + step) / step;
    }
    acc as f64
}

/// `C(n, i) * tau^i * (1 - tau)^(n - i)`.
pub fn bernstein_basis(n: u32, i: u32, tau: f64) -> Result<f64> {
    if i > n {
        return Err(Error::invalid(format!("basis index {i} exceeds degree {n}")));
    }
    if n > 60 {
        return Err(Error::invalid(format!("Bézier degree {n} is too large")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau = {tau} lies outside [0, 1]")));
    }
    Ok(bernstein_unchecked(n, i, tau))
}

#[inline]
fn bernstein_unchecked(n: u32, i: u32, tau: f64) -> f64 {
    binomial(n, i) * tau.powi(i as i32) * (1.0 - tau).powi((n - i) as i32)
}

/// Basis table for a fixed horizon and control-point count.
pub(crate) struct BezierPlan {
    // basis[t * k + i] = B_i^{k-1}(t / (H - 1))
    basis: Vec<f64>,
    points: usize,
    horizon: usize,
}

impl BezierPlan {
    pub(crate) fn new(points: usize, horizon: usize) -> Self {
        let degree = (points - 1) as u32;
        let last = (horizon - 1) as f64;
        let basis = (0..horizon)
            .flat_map(|t| {
                let tau = t as f64 / last;
                (0..=degree).map(move |i| bernstein_unchecked(degree, i, tau))
            })
            .collect();
        Self { basis, points, horizon }
    }

    pub(crate) fn reconstruct_into(&self, point_values: &[f64], dim: usize, out: &mut [f64]) {
        let k = self.points;
        for j in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..k {
                let p = point_values[i * dim + j];
                lo = lo.min(p);
                hi = hi.max(p);
            }
            for t in 0..self.horizon {
                let weights = &self.basis[t * k..(t + 1) * k];
                let v: f64 = (0..k).map(|i| weights[i] * point_values[i * dim + j]).sum();
                // Rounding can push a sum of convex weights an ulp past the hull.
                out[t * dim + j] = v.clamp(lo, hi);
            }
        }
    }
}

/// Dense Bézier curve of degree `K - 1` sampled at `tau = t / (H - 1)`.
///
/// The control points' horizon indices play no role in the curve itself;
/// they only record where the nominal points were read from.
pub fn reconstruct_bezier(points: &KnotSet, horizon: usize) -> Result<ControlTrajectory> {
    if horizon < 2 {
        return Err(Error::invalid("Bézier reconstruction needs a horizon of at least 2"));
    }
    if points.len() > 61 {
        return Err(Error::invalid("too many Bézier control points"));
    }
    let plan = BezierPlan::new(points.len(), horizon);
    let mut out = vec![0.0; horizon * points.dim()];
    plan.reconstruct_into(points.values(), points.dim(), &mut out);
    ControlTrajectory::from_vec(horizon, points.dim(), out)
}
