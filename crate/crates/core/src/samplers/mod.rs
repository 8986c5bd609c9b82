//! Control-trajectory sampling strategies.
//!
//! Every strategy maps a nominal trajectory and a Gaussian noise stream to a
//! [`SampleBatch`] of dense perturbed trajectories. The independent sampler
//! perturbs all `H x m` entries; the structured samplers perturb only `K x m`
//! knot values read from the nominal at [`uniform_indices`] and rebuild the
//! dense trajectory by interpolation.
//!
//! Perturbations are always recorded densely as `reconstructed - nominal`
//! before clipping, so the MPPI update treats every strategy the same way.

mod bezier;
mod linear;
mod noise;
mod spline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bezier::{bernstein_basis, reconstruct_bezier};
pub use linear::reconstruct_linear;
pub use noise::{seeded, CountingSource, GaussianSource, SeededRng};
pub use spline::{reconstruct_cubic_spline, reconstruct_cubic_spline_with, CubicSpline, SplineBoundary};

use crate::trajectory::{ActionBounds, ControlTrajectory};
use crate::{Error, Result};

/// Per-dimension noise standard deviations. Isotropic noise is the
/// all-equal case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NoiseSpec {
    sigma: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::invalid("noise needs at least one dimension"));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid(format!(
                "noise standard deviations must be finite and positive, got {sigma:?}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; dim])
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    fn check_dim(&self, dim: usize, context: &'static str) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: dim,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for NoiseSpec {
    type Error = Error;
    fn try_from(sigma: Vec<f64>) -> Result<Self> {
        Self::new(sigma)
    }
}

impl From<NoiseSpec> for Vec<f64> {
    fn from(spec: NoiseSpec) -> Self {
        spec.sigma
    }
}

/// `K` reduced parameters (knots, control points or waypoints), each tied
/// to a horizon index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSet {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl KnotSet {
    /// `values` is row-major `K x m`. Indices must start at 0 and be strictly
    /// increasing.
    pub fn new(indices: Vec<usize>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::invalid("a knot set needs at least 2 knots"));
        }
        if dim < 1 {
            return Err(Error::invalid("knot values need at least one dimension"));
        }
        if values.len() != indices.len() * dim {
            return Err(Error::DimensionMismatch {
                context: "knot values",
                expected: indices.len() * dim,
                actual: values.len(),
            });
        }
        if indices[0] != 0 {
            return Err(Error::invalid("the first knot index must be 0"));
        }
        if let Some(w) = indices.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "knot indices must be strictly increasing (found {} then {})",
                w[0], w[1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("knot values"));
        }
        Ok(Self { indices, values, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(indices: Vec<usize>, rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(indices, dim, values)
    }

    /// Reads the nominal's rows at `indices`.
    pub fn extract(nominal: &ControlTrajectory, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= nominal.horizon()) {
            return Err(Error::invalid(format!(
                "knot index {bad} outside horizon {}",
                nominal.horizon()
            )));
        }
        let values = indices.iter().flat_map(|&i| nominal.row(i).iter().copied()).collect();
        Self::new(indices.to_vec(), nominal.dim(), values)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn check_span(&self, horizon: usize) -> Result<()> {
        let last = *self.indices.last().expect("at least two knots");
        if last + 1 != horizon {
            return Err(Error::invalid(format!(
                "knots must span the horizon: last index {last}, horizon {horizon}"
            )));
        }
        Ok(())
    }
}

/// Horizon indices `round((k - 1)(H - 1) / (K - 1))` for `k = 1..=K`, with
/// halves rounded away from zero.
pub fn uniform_indices(horizon: usize, count: usize) -> Result<Vec<usize>> {
    if count < 2 {
        return Err(Error::invalid(format!("need at least 2 knots, got {count}")));
    }
    if count > horizon {
        return Err(Error::invalid(format!(
            "{count} knots do not fit in a horizon of {horizon} without repeating an index"
        )));
    }
    let span = horizon - 1;
    let gaps = count - 1;
    Ok((0..count).map(|k| (2 * k * span + gaps) / (2 * gaps)).collect())
}

/// The four sampling strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Independent Gaussian noise at every step and dimension.
    #[serde(rename = "normal")]
    IidGaussian,
    CubicSpline,
    Bezier,
    LinearInterp,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] = [
        SamplerKind::IidGaussian,
        SamplerKind::CubicSpline,
        SamplerKind::Bezier,
        SamplerKind::LinearInterp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::IidGaussian => "normal",
            SamplerKind::CubicSpline => "cubic-spline",
            SamplerKind::Bezier => "bezier",
            SamplerKind::LinearInterp => "linear-interp",
        }
    }

    pub fn is_structured(self) -> bool {
        self != SamplerKind::IidGaussian
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown sampler kind '{s}' (valid kinds: normal, cubic-spline, bezier, linear-interp)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Knots, control points or waypoints. Ignored by the independent sampler.
    pub knot_count: usize,
    pub noise: NoiseSpec,
    pub boundary: SplineBoundary,
    /// Forces the first rollout's noise to zero so the nominal itself is
    /// always among the candidates. Draws are still consumed.
    pub preserve_nominal: bool,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, knot_count: usize, noise: NoiseSpec) -> Self {
        Self {
            kind,
            knot_count,
            noise,
            boundary: SplineBoundary::Natural,
            preserve_nominal: false,
        }
    }

    pub fn validate(&self, horizon: usize, dim: usize) -> Result<()> {
        self.noise.check_dim(dim, "sampler noise")?;
        if self.kind.is_structured() {
            if self.knot_count < 2 {
                return Err(Error::config(format!(
                    "{} needs k >= 2, got {}",
                    self.kind, self.knot_count
                )));
            }
            if self.knot_count > horizon {
                return Err(Error::config(format!(
                    "{} k = {} exceeds horizon {horizon}",
                    self.kind, self.knot_count
                )));
            }
        }
        Ok(())
    }

    /// Normal draws consumed per rollout.
    pub fn draws_per_rollout(&self, horizon: usize, dim: usize) -> usize {
        if self.kind.is_structured() {
            self.knot_count * dim
        } else {
            horizon * dim
        }
    }
}

/// Knot-space noise behind a structured batch.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotNoise {
    pub indices: Vec<usize>,
    /// One row-major `K x m` block per rollout.
    pub noise: Vec<Vec<f64>>,
}

/// `N` perturbed trajectories with their dense pre-clip perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub trajectories: Vec<ControlTrajectory>,
    pub perturbations: Vec<ControlTrajectory>,
    /// Present for structured samplers only.
    pub knot_noise: Option<KnotNoise>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

fn fill_noise<G: GaussianSource + ?Sized>(sigma: &[f64], out: &mut [f64], rng: &mut G) {
    let m = sigma.len();
    for (idx, v) in out.iter_mut().enumerate() {
        *v = sigma[idx % m] * rng.standard_normal();
    }
}

/// Independent Gaussian perturbation of every entry. Draws are consumed
/// rollout by rollout, then step by step, then dimension by dimension.
pub fn sample_iid<G: GaussianSource + ?Sized>(
    nominal: &ControlTrajectory,
    noise: &NoiseSpec,
    rollouts: usize,
    rng: &mut G,
) -> Result<SampleBatch> {
    sample_iid_inner(nominal, noise, rollouts, None, false, rng)
}

fn sample_iid_inner<G: GaussianSource + ?Sized>(
    nominal: &ControlTrajectory,
    noise: &NoiseSpec,
    rollouts: usize,
    bounds: Option<&ActionBounds>,
    preserve_nominal: bool,
    rng: &mut G,
) -> Result<SampleBatch> {
    if rollouts < 1 {
        return Err(Error::invalid("need at least one rollout"));
    }
    noise.check_dim(nominal.dim(), "sample_iid")?;
    let (h, m) = (nominal.horizon(), nominal.dim());
    let mut trajectories = Vec::with_capacity(rollouts);
    let mut perturbations = Vec::with_capacity(rollouts);
    for k in 0..rollouts {
        let mut eps = vec![0.0; h * m];
        fill_noise(noise.sigma(), &mut eps, rng);
        if preserve_nominal && k == 0 {
            eps.fill(0.0);
        }
        let mut traj: Vec<f64> = nominal.as_slice().iter().zip(&eps).map(|(u, e)| u + e).collect();
        if let Some(b) = bounds {
            b.clip_values(&mut traj);
        }
        trajectories.push(ControlTrajectory::from_parts_unchecked(h, m, traj));
        perturbations.push(ControlTrajectory::from_parts_unchecked(h, m, eps));
    }
    Ok(SampleBatch {
        trajectories,
        perturbations,
        knot_noise: None,
    })
}

/// Adds independent `N(0, sigma_j^2)` noise to every knot value, `K * m`
/// draws in knot-major order.
pub fn perturb_knots<G: GaussianSource + ?Sized>(
    nominal_knots: &KnotSet,
    noise: &NoiseSpec,
    rng: &mut G,
) -> Result<KnotSet> {
    noise.check_dim(nominal_knots.dim(), "perturb_knots")?;
    let mut eps = vec![0.0; nominal_knots.values.len()];
    fill_noise(noise.sigma(), &mut eps, rng);
    let values = nominal_knots.values.iter().zip(&eps).map(|(v, e)| v + e).collect();
    Ok(KnotSet {
        indices: nominal_knots.indices.clone(),
        values,
        dim: nominal_knots.dim,
    })
}

/// A reconstruction prepared for one knot layout and horizon.
pub(crate) enum Reconstruction {
    Spline(spline::SplinePlan),
    Bezier(bezier::BezierPlan),
    Linear(linear::LinearPlan),
}

impl Reconstruction {
    pub(crate) fn new(config: &SamplerConfig, indices: &[usize], horizon: usize) -> Self {
        match config.kind {
            SamplerKind::CubicSpline => Self::Spline(spline::SplinePlan::new(indices, horizon, config.boundary)),
            SamplerKind::Bezier => Self::Bezier(bezier::BezierPlan::new(indices.len(), horizon)),
            SamplerKind::LinearInterp => Self::Linear(linear::LinearPlan::new(indices, horizon)),
            SamplerKind::IidGaussian => unreachable!("the independent sampler has no knots"),
        }
    }

    pub(crate) fn reconstruct_into(&self, knot_values: &[f64], dim: usize, out: &mut [f64]) {
        match self {
            Self::Spline(p) => p.reconstruct_into(knot_values, dim, out),
            Self::Bezier(p) => p.reconstruct_into(knot_values, dim, out),
            Self::Linear(p) => p.reconstruct_into(knot_values, dim, out),
        }
    }
}

/// Samples `rollouts` clipped trajectories around `nominal` with the
/// configured strategy.
pub fn generate_batch<G: GaussianSource + ?Sized>(
    config: &SamplerConfig,
    nominal: &ControlTrajectory,
    bounds: &ActionBounds,
    rollouts: usize,
    rng: &mut G,
) -> Result<SampleBatch> {
    let (h, m) = (nominal.horizon(), nominal.dim());
    config.validate(h, m)?;
    if bounds.dim() != m {
        return Err(Error::DimensionMismatch {
            context: "generate_batch bounds",
            expected: m,
            actual: bounds.dim(),
        });
    }
    if rollouts < 1 {
        return Err(Error::invalid("need at least one rollout"));
    }
    if !config.kind.is_structured() {
        return sample_iid_inner(
            nominal,
            &config.noise,
            rollouts,
            Some(bounds),
            config.preserve_nominal,
            rng,
        );
    }

    let indices = uniform_indices(h, config.knot_count)?;
    let nominal_knots = KnotSet::extract(nominal, &indices)?;
    let plan = Reconstruction::new(config, &indices, h);

    // All noise is drawn up front, in rollout order.
    let mut knot_noise = Vec::with_capacity(rollouts);
    for k in 0..rollouts {
        let mut eps = vec![0.0; indices.len() * m];
        fill_noise(config.noise.sigma(), &mut eps, rng);
        if config.preserve_nominal && k == 0 {
            eps.fill(0.0);
        }
        knot_noise.push(eps);
    }

    let mut trajectories = Vec::with_capacity(rollouts);
    let mut perturbations = Vec::with_capacity(rollouts);
    let mut knots = vec![0.0; indices.len() * m];
    for eps in &knot_noise {
        for ((k, v), e) in knots.iter_mut().zip(nominal_knots.values()).zip(eps) {
            *k = v + e;
        }
        let mut dense = vec![0.0; h * m];
        plan.reconstruct_into(&knots, m, &mut dense);
        let pert = dense.iter().zip(nominal.as_slice()).map(|(r, u)| r - u).collect();
        bounds.clip_values(&mut dense);
        trajectories.push(ControlTrajectory::from_parts_unchecked(h, m, dense));
        perturbations.push(ControlTrajectory::from_parts_unchecked(h, m, pert));
    }
    Ok(SampleBatch {
        trajectories,
        perturbations,
        knot_noise: Some(KnotNoise {
            indices,
            noise: knot_noise,
        }),
    })
}

/// Dense trajectory rebuilt from knot values with the configured strategy.
pub fn reconstruct(config: &SamplerConfig, knots: &KnotSet, horizon: usize) -> Result<ControlTrajectory> {
    match config.kind {
        SamplerKind::CubicSpline => reconstruct_cubic_spline_with(knots, horizon, config.boundary),
        SamplerKind::Bezier => reconstruct_bezier(knots, horizon),
        SamplerKind::LinearInterp => reconstruct_linear(knots, horizon),
        SamplerKind::IidGaussian => Err(Error::invalid("the independent sampler has no knot reconstruction")),
    }
}
