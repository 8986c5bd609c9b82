use rand::Rng;
use rand_distr::StandardNormal;

/// A stream of independent standard-normal draws.
///
/// Every sampler consumes noise through this trait so draw counts can be
/// audited with [`CountingSource`].
pub trait GaussianSource {
    fn standard_normal(&mut self) -> f64;
}

impl<R: Rng + ?Sized> GaussianSource for R {
    fn standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

/// Wraps a source and counts how many normal draws were taken from it.
#[derive(Debug, Clone)]
pub struct CountingSource<S> {
    inner: S,
    draws: u64,
}

impl<S> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, draws: 0 }
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn reset(&mut self) {
        self.draws = 0;
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: GaussianSource> GaussianSource for CountingSource<S> {
    fn standard_normal(&mut self) -> f64 {
        self.draws += 1;
        self.inner.standard_normal()
    }
}

/// Seeded stream used by the controller and the benchmark harness.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
