//! Path samplers: exact Bessel skeletons, Bessel bridges, bridges conditioned
//! to stay below a level, and house-moving paths.

mod bridge;
mod cdf;
mod house;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::ProcessParams;

pub use bridge::{sample_bessel_bridge, sample_conditioned_bridge, BridgeMethod, BridgeSampler, ConditionedOptions};
pub use cdf::{inverse_cdf, TabulatedCdf};
pub use house::{sample_house_path, HousePathSampler};

/// A (seed, stream) pair addressing an independent ChaCha8 keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Generator positioned at counter slot `slot`; slots are 2^16 words apart.
    pub fn rng_at(&self, slot: u64) -> ChaCha8Rng {
        let mut r = self.rng();
        r.set_word_pos((slot as u128) << 16);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    BesselExact,
    BridgeInverseCdf,
    BridgeBrownianNorm,
    HouseMoving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub stream: u64,
    pub steps: usize,
    /// Largest grid spacing.
    pub dt: f64,
    pub delta: f64,
    pub a: f64,
    /// Endpoint of bridges and barrier of house paths; None for free paths.
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    pub crossing_correction: bool,
    /// Number of values pulled back below the barrier.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: PathMeta,
}

impl SamplePath {
    /// Value at the grid time closest to t.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s < t);
        let i = if i == self.times.len() || (i > 0 && t - self.times[i - 1] < self.times[i] - t) { i - 1 } else { i };
        self.values[i]
    }

    pub fn max_until(&self, t: f64) -> f64 {
        self.times.iter().zip(&self.values).take_while(|(s, _)| **s <= t).map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// t_k = k·horizon/steps for k = 0..=steps.
pub fn uniform_grid(steps: usize, horizon: f64) -> Vec<f64> {
    (0..=steps).map(|k| if k == steps { horizon } else { horizon * k as f64 / steps as f64 }).collect()
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return domain("grid needs at least two points and must start at 0");
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || !grid.iter().all(|t| t.is_finite()) {
        return domain("grid must be strictly ascending and finite");
    }
    Ok(())
}

pub(crate) fn max_step(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// One exact step of BES(δ) over dt: the squared value divided by dt is a
/// noncentral χ² with δ degrees of freedom and noncentrality x²/dt, drawn as
/// a Poisson mixture of gammas.
pub fn bessel_step<R: Rng + ?Sized>(delta: f64, x: f64, dt: f64, rng: &mut R) -> Result<f64> {
    let lambda = x * x / dt;
    let n = if lambda > 0.0 {
        Poisson::new(0.5 * lambda).map_err(|e| Error::Domain(format!("poisson: {e}")))?.sample(rng)
    } else {
        0.0
    };
    let g = Gamma::new(0.5 * delta + n, 2.0).map_err(|e| Error::Domain(format!("gamma: {e}")))?.sample(rng);
    Ok((dt * g).sqrt())
}

/// Exact skeleton of BES(δ) from a on `grid`.
pub fn sample_bessel_path(p: &ProcessParams, grid: &[f64], stream: RngStream) -> Result<SamplePath> {
    check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    values.push(p.a());
    for (k, w) in grid.windows(2).enumerate() {
        let mut rng = stream.rng_at(k as u64);
        let x = values[k];
        values.push(bessel_step(p.delta(), x, w[1] - w[0], &mut rng)?);
    }
    Ok(SamplePath {
        times: grid.to_vec(),
        values,
        meta: PathMeta {
            sampler: SamplerKind::BesselExact,
            seed: stream.seed,
            stream: stream.stream,
            steps: grid.len() - 1,
            dt: max_step(grid),
            delta: p.delta(),
            a: p.a(),
            b: None,
            eta: None,
            attempts: None,
            crossing_correction: false,
            clamped: 0,
        },
    })
}

/// Runs `f` on streams 0..n of `seed` in parallel; the output order is the
/// stream order.
pub fn ensemble<T, F>(seed: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync,
{
    (0..n as u64).into_par_iter().map(|s| f(RngStream::new(seed, s))).collect()
}
