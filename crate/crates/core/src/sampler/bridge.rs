use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_grid, max_step, PathMeta, RngStream, SamplePath, SamplerKind, TabulatedCdf};
use crate::error::{domain, Error, Result};
use crate::kernels::{bridge_transition, theta, ProcessParams};

const CELLS: usize = 1024;

/// How bridge values are generated between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeMethod {
    /// Sequential inverse-CDF draws from the bridge transition density.
    InverseCdf,
    /// Norm of δ independent Brownian bridges; integer δ only.
    BrownianNorm,
    /// BrownianNorm for integer δ, InverseCdf otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedOptions {
    pub method: BridgeMethod,
    pub max_attempts: usize,
    /// Also reject with the exact probability of crossing between grid
    /// points (δ = 3 only).
    pub crossing_correction: bool,
}

impl Default for ConditionedOptions {
    fn default() -> Self {
        ConditionedOptions { method: BridgeMethod::Auto, max_attempts: 1_000_000, crossing_correction: false }
    }
}

fn integer_dimension(delta: f64) -> Option<usize> {
    (delta >= 1.0 && delta.fract() == 0.0 && delta <= 64.0).then_some(delta as usize)
}

/// Bessel bridge from p.a() at time 0 to `endpoint` at the last grid time.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    p: ProcessParams,
    endpoint: f64,
    grid: Vec<f64>,
    method: BridgeMethod,
    first: Option<StepTable>,
}

#[derive(Debug, Clone)]
struct StepTable {
    table: TabulatedCdf,
    scale: f64,
    power: i32,
}

impl StepTable {
    fn value(&self, u: f64) -> f64 {
        self.scale * self.table.inverse(u).powi(self.power)
    }
}

impl BridgeSampler {
    pub fn new(p: ProcessParams, endpoint: f64, grid: &[f64], method: BridgeMethod) -> Result<Self> {
        check_grid(grid)?;
        if !(endpoint >= 0.0) || !endpoint.is_finite() {
            return domain(format!("bridge endpoint must be finite and >= 0, got {endpoint}"));
        }
        let method = match method {
            BridgeMethod::Auto if integer_dimension(p.delta()).is_some() => BridgeMethod::BrownianNorm,
            BridgeMethod::Auto => BridgeMethod::InverseCdf,
            BridgeMethod::BrownianNorm if integer_dimension(p.delta()).is_none() => {
                return domain(format!("Brownian-norm bridges need integer delta, got {}", p.delta()));
            }
            m => m,
        };
        let mut s = BridgeSampler { p, endpoint, grid: grid.to_vec(), method, first: None };
        if method == BridgeMethod::InverseCdf && grid.len() > 2 {
            s.first = Some(s.step_table(0, p.a())?);
        }
        Ok(s)
    }

    pub fn method(&self) -> BridgeMethod {
        self.method
    }

    fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    // Inverse-CDF table for the step from grid[k] at x to grid[k+1].
    fn step_table(&self, k: usize, x: f64) -> Result<StepTable> {
        let (s, t, horizon, e) = (self.grid[k], self.grid[k + 1], self.horizon(), self.endpoint);
        let nu = self.p.nu();
        let sd = ((t - s) * (horizon - t) / (horizon - s)).sqrt();
        let mean = x + (e - x) * (t - s) / (horizon - s);
        let spread = (10.0 + 2.0 * self.p.delta().max(1.0).sqrt()) * sd;
        let lo = (x.min(mean) - spread).max(0.0);
        let mut hi = x.max(e).max(mean) + spread;
        let power = if lo == 0.0 && nu < 0.0 { (1.0 / (nu + 1.0)).ceil() as i32 } else { 1 };
        let density =
            |y: f64| bridge_transition(&self.p, s, x, t, y.max(f64::MIN_POSITIVE), horizon, e).map(|v| v.value);
        for _ in 0..8 {
            let table = if power == 1 {
                TabulatedCdf::from_density(density, lo, hi, CELLS)?
            } else {
                let pf = power as f64;
                TabulatedCdf::from_density(
                    |v| {
                        if v <= 0.0 {
                            return Ok(0.0);
                        }
                        Ok(density(hi * v.powi(power))? * hi * pf * v.powi(power - 1))
                    },
                    0.0,
                    1.0,
                    CELLS,
                )?
            };
            if (table.mass() - 1.0).abs() <= 1e-6 {
                return Ok(if power == 1 {
                    StepTable { table, scale: 1.0, power: 1 }
                } else {
                    StepTable { table, scale: hi, power }
                });
            }
            if table.mass() > 1.0 + 1e-6 {
                return Err(Error::InverseCdf(format!("bridge table mass {} exceeds 1", table.mass())));
            }
            hi = lo + 2.0 * (hi - lo);
        }
        Err(Error::InverseCdf(format!("bridge table from x={x} at t={s} never reached unit mass")))
    }

    fn meta(&self, stream: RngStream) -> PathMeta {
        PathMeta {
            sampler: if self.method == BridgeMethod::BrownianNorm {
                SamplerKind::BridgeBrownianNorm
            } else {
                SamplerKind::BridgeInverseCdf
            },
            seed: stream.seed,
            stream: stream.stream,
            steps: self.grid.len() - 1,
            dt: max_step(&self.grid),
            delta: self.p.delta(),
            a: self.p.a(),
            b: Some(self.endpoint),
            eta: None,
            attempts: None,
            crossing_correction: false,
            clamped: 0,
        }
    }

    // Generates one path, calling `keep(k, x, y)` after every step; a false
    // return abandons the path.
    fn generate<F>(&self, rng: &mut ChaCha8Rng, mut keep: F) -> Result<Option<Vec<f64>>>
    where
        F: FnMut(usize, f64, f64, &mut ChaCha8Rng) -> Result<bool>,
    {
        let n = self.grid.len();
        let mut values = Vec::with_capacity(n);
        values.push(self.p.a());
        match self.method {
            BridgeMethod::BrownianNorm => {
                let d = integer_dimension(self.p.delta()).expect("checked at construction");
                let target = self.brownian_endpoint(d, rng)?;
                let mut pos = vec![0.0; d];
                pos[0] = self.p.a();
                let horizon = self.horizon();
                for k in 0..n - 1 {
                    let (s, t) = (self.grid[k], self.grid[k + 1]);
                    let y = if k == n - 2 {
                        self.endpoint
                    } else {
                        let frac = (t - s) / (horizon - s);
                        let sd = ((t - s) * (horizon - t) / (horizon - s)).sqrt();
                        let mut r2 = 0.0;
                        for (c, g) in pos.iter_mut().zip(&target) {
                            let z: f64 = StandardNormal.sample(rng);
                            *c += (g - *c) * frac + sd * z;
                            r2 += *c * *c;
                        }
                        r2.sqrt()
                    };
                    let x = values[k];
                    values.push(y);
                    if !keep(k, x, y, rng)? {
                        return Ok(None);
                    }
                }
            }
            _ => {
                for k in 0..n - 1 {
                    let x = values[k];
                    let y = if k == n - 2 {
                        self.endpoint
                    } else {
                        let u: f64 = rng.random();
                        match (&self.first, k) {
                            (Some(t), 0) => t.value(u),
                            _ => self.step_table(k, x)?.value(u),
                        }
                    };
                    values.push(y);
                    if !keep(k, x, y, rng)? {
                        return Ok(None);
                    }
                }
            }
        }
        Ok(Some(values))
    }

    // Endpoint of the δ-dimensional Brownian bridge: radius `endpoint`,
    // direction von Mises–Fisher with concentration a·e/T about the start.
    fn brownian_endpoint(&self, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let e = self.endpoint;
        let kappa = self.p.a() * e / self.horizon();
        let mut y = vec![0.0; d];
        if d == 1 {
            let plus = 1.0 / (1.0 + (-2.0 * kappa).exp());
            y[0] = if rng.random::<f64>() < plus { e } else { -e };
            return Ok(y);
        }
        let w = if kappa == 0.0 {
            let z: f64 = Beta::new(0.5 * (d as f64 - 1.0), 0.5 * (d as f64 - 1.0))
                .map_err(|err| Error::Domain(format!("beta: {err}")))?
                .sample(rng);
            1.0 - 2.0 * z
        } else {
            wood(d, kappa, rng)?
        };
        y[0] = e * w;
        y[1] = e * (1.0 - w * w).max(0.0).sqrt();
        Ok(y)
    }

    /// One bridge path.
    pub fn sample(&self, stream: RngStream) -> Result<SamplePath> {
        let mut rng = stream.rng();
        let values = self.generate(&mut rng, |_, _, _, _| Ok(true))?.expect("unconditioned paths are kept");
        Ok(SamplePath { times: self.grid.clone(), values, meta: self.meta(stream) })
    }

    /// One bridge path whose grid values (and, with the crossing correction,
    /// the continuous path) stay at or below endpoint + eta.
    pub fn sample_conditioned(&self, eta: f64, opts: &ConditionedOptions, stream: RngStream) -> Result<SamplePath> {
        if !(eta > 0.0) {
            return domain(format!("eta must be > 0, got {eta}"));
        }
        if opts.crossing_correction && !self.p.is_half_order() {
            return domain(format!("the crossing correction is exact only for delta = 3, got {}", self.p.delta()));
        }
        let c = self.endpoint + eta;
        if self.p.a() > c {
            return domain(format!("start {} lies above the level {c}", self.p.a()));
        }
        let mut rng = stream.rng();
        for attempt in 1..=opts.max_attempts {
            let kept = self.generate(&mut rng, |k, x, y, rng| {
                if y > c {
                    return Ok(false);
                }
                if opts.crossing_correction {
                    let dt = self.grid[k + 1] - self.grid[k];
                    if 2.0 * (c - x) * (c - y) / dt < 40.0 {
                        let stay = theta::theta_max_dist_half(c, dt, x, y)?;
                        if rng.random::<f64>() >= stay {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            })?;
            if let Some(values) = kept {
                let mut meta = self.meta(stream);
                meta.eta = Some(eta);
                meta.attempts = Some(attempt);
                meta.crossing_correction = opts.crossing_correction;
                return Ok(SamplePath { times: self.grid.clone(), values, meta });
            }
        }
        Err(Error::RejectionExhausted { attempts: opts.max_attempts })
    }
}

// Wood's rejection sampler for the first coordinate of a von Mises–Fisher
// direction on the sphere in R^d.
pub(super) fn wood(d: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let m = d as f64 - 1.0;
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * m, 0.5 * m).map_err(|err| Error::Domain(format!("beta: {err}")))?;
    for _ in 0..10_000 {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
            return Ok(w);
        }
    }
    Err(Error::RejectionExhausted { attempts: 10_000 })
}

/// Bessel bridge from p.a() to `endpoint` on `grid` (last point = end time).
pub fn sample_bessel_bridge(
    p: &ProcessParams,
    endpoint: f64,
    grid: &[f64],
    method: BridgeMethod,
    stream: RngStream,
) -> Result<SamplePath> {
    BridgeSampler::new(*p, endpoint, grid, method)?.sample(stream)
}

/// Bridge from p.a() to p.b() kept only if it stays at or below b + eta.
pub fn sample_conditioned_bridge(
    p: &ProcessParams,
    eta: f64,
    grid: &[f64],
    opts: &ConditionedOptions,
    stream: RngStream,
) -> Result<SamplePath> {
    BridgeSampler::new(*p, p.b(), grid, opts.method)?.sample_conditioned(eta, opts, stream)
}
