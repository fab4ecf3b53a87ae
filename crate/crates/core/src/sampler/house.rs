use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use super::{PathMeta, RngStream, SamplePath, SamplerKind, TabulatedCdf};
use crate::error::{domain, Error, Result};
use crate::housemoving::HouseMovingModel;
use crate::kernels::jsc_below_zero;
use crate::specfun::{scaled_origin_value, zero_table};

const X_NODES: usize = 129;
const START_CELLS: usize = 1024;
const MAX_CELLS: usize = 16_384;
const TABLE_MASS_TOL: f64 = 1e-6;

/// Sequential inverse-CDF sampler of house-moving paths on the uniform grid
/// t_k = k/steps.
///
/// All steps share one sub-barrier kernel matrix between a fixed set of
/// start nodes and the tabulation nodes; a path at x between two start nodes
/// draws its next value by interpolating the two nodes' quantiles at the
/// same uniform.
#[derive(Debug, Clone)]
pub struct HousePathSampler {
    model: HouseMovingModel,
    steps: usize,
    power: i32,
    cells: usize,
    // tabulation abscissae v in [0,1] (y = b v^power), cell ends and midpoints
    v: Vec<f64>,
    y: Vec<f64>,
    x: Vec<f64>,
    // j_n^{ν+1}/w_n and e^{−j_n² dt/(2b²)}·(2/b²)/w_n²
    hit_coef: Vec<f64>,
    zeros: Vec<f64>,
    // Jsc(y r_n) at tabulation nodes and start nodes, row-major by node
    ky: Vec<f64>,
    kx: Vec<f64>,
    // shared kernel q1(dt; x_i, y_j) (times dy/dv), row-major in i
    kernel: Vec<f64>,
    start_row: Vec<f64>,
    terms: usize,
}

impl HousePathSampler {
    pub fn new(model: &HouseMovingModel, steps: usize) -> Result<Self> {
        if steps < 2 {
            return domain(format!("house paths need at least 2 steps, got {steps}"));
        }
        let mut cells = START_CELLS;
        loop {
            let s = Self::build(model, steps, cells)?;
            let worst = s.worst_table_mass_defect()?;
            if worst <= TABLE_MASS_TOL {
                return Ok(s);
            }
            if cells >= MAX_CELLS {
                return Err(Error::InverseCdf(format!(
                    "house transition tables miss unit mass by {worst:e} at {cells} cells"
                )));
            }
            cells *= 2;
        }
    }

    fn build(model: &HouseMovingModel, steps: usize, cells: usize) -> Result<Self> {
        let p = model.params();
        let (nu, b) = (p.nu(), p.b());
        let dt = 1.0 / steps as f64;
        let scale = dt / (2.0 * b * b);
        let terms = (((40.0 / scale).sqrt() + nu.abs() + 2.0) / std::f64::consts::PI).ceil() as usize + 8;
        let zt = zero_table(nu, terms)?;
        let (zeros, weights) = (&zt.zeros()[..terms], &zt.weights()[..terms]);
        let power = if nu < 0.0 { (1.0 / (nu + 1.0)).ceil() as i32 } else { 1 };
        let v: Vec<f64> = (0..=2 * cells).map(|i| i as f64 / (2 * cells) as f64).collect();
        let y: Vec<f64> = v.iter().map(|&v| b * v.powi(power)).collect();
        let mut x: Vec<f64> = (0..X_NODES).map(|i| b * i as f64 / (X_NODES - 1) as f64).collect();
        x[X_NODES - 1] = b * (1.0 - 1e-6);
        let jsc_rows = |pts: &[f64]| -> Result<Vec<f64>> {
            let rows: Vec<Vec<f64>> =
                pts.par_iter()
                    .map(|&q| {
                        zeros
                            .iter()
                            .zip(weights)
                            .map(|(&j, &w)| {
                                if q == 0.0 {
                                    Ok(scaled_origin_value(nu))
                                } else {
                                    jsc_below_zero(nu, q.min(b), b, j, w)
                                }
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<_>>()?;
            Ok(rows.concat())
        };
        let ky = jsc_rows(&y)?;
        let kx = jsc_rows(&x)?;
        let hit_coef: Vec<f64> = zeros.iter().zip(weights).map(|(&j, &w)| j.powf(nu + 1.0) / w).collect();
        let step_coef: Vec<f64> = zeros
            .iter()
            .zip(weights)
            .map(|(&j, &w)| (j / b).powf(2.0 * nu) * 2.0 / (b * b * w * w) * (-j * j * scale).exp())
            .collect();
        let jac: Vec<f64> = v
            .iter()
            .zip(&y)
            .map(|(&v, &y)| if y == 0.0 { 0.0 } else { y.powf(2.0 * nu + 1.0) * b * power as f64 * v.powi(power - 1) })
            .collect();
        let row = |k: &[f64]| -> Vec<f64> {
            (0..y.len())
                .map(|j| {
                    let kyj = &ky[j * terms..(j + 1) * terms];
                    let s: f64 = k.iter().zip(kyj).zip(&step_coef).map(|((a, b), c)| a * b * c).sum();
                    (s * jac[j]).max(0.0)
                })
                .collect()
        };
        let kernel: Vec<f64> =
            (0..X_NODES).into_par_iter().map(|i| row(&kx[i * terms..(i + 1) * terms])).collect::<Vec<_>>().concat();
        let a = p.a();
        let ka: Vec<f64> = zeros
            .iter()
            .zip(weights)
            .map(|(&j, &w)| if a == 0.0 { Ok(scaled_origin_value(nu)) } else { jsc_below_zero(nu, a, b, j, w) })
            .collect::<Result<_>>()?;
        let start_row = row(&ka);
        Ok(HousePathSampler {
            model: model.clone(),
            steps,
            power,
            cells,
            v,
            y,
            x,
            hit_coef,
            zeros: zeros.to_vec(),
            ky,
            kx,
            kernel,
            start_row,
            terms,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn model(&self) -> &HouseMovingModel {
        &self.model
    }

    /// Tabulation cells in use after the mass check.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn times(&self) -> Vec<f64> {
        super::uniform_grid(self.steps, 1.0)
    }

    // q2(tau, ·) at the rows of `k`.
    fn hitting_row(&self, tau: f64, k: &[f64]) -> Vec<f64> {
        let b = self.model.params().b();
        let c: Vec<f64> =
            self.zeros.iter().zip(&self.hit_coef).map(|(&j, &h)| h * (-j * j * tau / (2.0 * b * b)).exp()).collect();
        k.chunks(self.terms).map(|r| 2.0 / (b * b) * r.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    // Inverse-CDF table for one kernel row times the hitting factor g.
    fn table(&self, kernel_row: &[f64], g: &[f64]) -> Result<TabulatedCdf> {
        let n = self.cells;
        let f: Vec<f64> = kernel_row.iter().zip(g).map(|(k, g)| k * g.max(0.0)).collect();
        let mut xs = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut pdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for i in 0..=n {
            let j = 2 * i;
            if i > 0 {
                let h = self.v[j] - self.v[j - 2];
                acc += h / 6.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
            }
            xs.push(self.v[j]);
            cdf.push(acc);
            pdf.push(f[j]);
        }
        TabulatedCdf::from_parts(xs, cdf, pdf)
    }

    // Tables for the step from t_k to t_{k+1} (k ≥ 1), one per start node,
    // with the analytic normaliser of each row.
    fn step_tables(&self, k: usize) -> Result<Vec<(TabulatedCdf, f64)>> {
        let t_next = (k + 1) as f64 / self.steps as f64;
        let t_now = k as f64 / self.steps as f64;
        let g = self.hitting_row(1.0 - t_next, &self.ky);
        let gx = self.hitting_row(1.0 - t_now, &self.kx);
        let len = self.y.len();
        (0..X_NODES)
            .into_par_iter()
            .map(|i| {
                let t = self.table(&self.kernel[i * len..(i + 1) * len], &g)?;
                Ok((t, gx[i]))
            })
            .collect()
    }

    fn start_table(&self) -> Result<TabulatedCdf> {
        let g = self.hitting_row(1.0 - 1.0 / self.steps as f64, &self.ky);
        self.table(&self.start_row, &g)
    }

    // Largest |mass − normaliser| of any row, relative to the step's largest
    // normaliser; rows far from where the process can be carry only
    // absolute series accuracy.
    fn worst_table_mass_defect(&self) -> Result<f64> {
        let norm = self.model.normalizer();
        let mut worst = (self.start_table()?.mass() / norm - 1.0).abs();
        for k in 1..self.steps - 1 {
            let rows = self.step_tables(k)?;
            let top = rows.iter().map(|r| r.1).fold(0.0, f64::max);
            for (t, gx) in rows {
                worst = worst.max((t.mass() - gx).abs() / top);
            }
        }
        Ok(worst)
    }

    fn value(&self, t: &TabulatedCdf, u: f64) -> f64 {
        self.model.params().b() * t.inverse(u).powi(self.power)
    }

    /// Next value from x over step k (k ≥ 1) given the uniform u.
    fn interpolate(&self, tables: &[(TabulatedCdf, f64)], x: f64, u: f64) -> f64 {
        let h = self.x[1] - self.x[0];
        let i = ((x / h).floor() as usize).min(X_NODES - 2);
        let theta = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        (1.0 - theta) * self.value(&tables[i].0, u) + theta * self.value(&tables[i + 1].0, u)
    }

    /// Value at t_{k+1} of a path at x at t_k whose step-k uniform is u.
    pub fn step_value(&self, k: usize, x: f64, u: f64) -> Result<f64> {
        if k + 1 >= self.steps {
            return domain(format!("step {k} is not an interior step of {}", self.steps));
        }
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("u must lie in [0,1], got {u}"));
        }
        if k == 0 {
            return Ok(self.value(&self.start_table()?, u));
        }
        Ok(self.interpolate(&self.step_tables(k)?, x, u))
    }

    fn uniform(seed: u64, path: u64, step: usize) -> f64 {
        RngStream::new(seed, path).rng_at(step as u64).random()
    }

    /// Samples one path per stream of `seed` in `streams`, step by step.
    /// `visit(k, before, after)` sees the values of all paths at t_k and
    /// t_{k+1}; the final step to t = 1 pins every path at b. Returns the
    /// number of values pulled back below b.
    pub fn run<F>(&self, seed: u64, streams: Range<u64>, mut visit: F) -> Result<usize>
    where
        F: FnMut(usize, &[f64], &[f64]) -> Result<()>,
    {
        let b = self.model.params().b();
        let below = b * (1.0 - 1e-12);
        let mut clamped = 0usize;
        let first = streams.start;
        let n_paths = (streams.end.saturating_sub(first)) as usize;
        let mut current = vec![self.model.params().a(); n_paths];
        let start = self.start_table()?;
        for k in 0..self.steps {
            let next: Vec<f64> = if k == self.steps - 1 {
                vec![b; n_paths]
            } else if k == 0 {
                (0..n_paths)
                    .into_par_iter()
                    .map(|p| self.value(&start, Self::uniform(seed, first + p as u64, k)))
                    .collect()
            } else {
                let tables = self.step_tables(k)?;
                current
                    .par_iter()
                    .enumerate()
                    .map(|(p, &x)| self.interpolate(&tables, x, Self::uniform(seed, first + p as u64, k)))
                    .collect()
            };
            let mut next = next;
            if k < self.steps - 1 {
                for y in next.iter_mut() {
                    if *y >= below || *y < 0.0 {
                        clamped += 1;
                        *y = y.clamp(0.0, below);
                    }
                }
            }
            visit(k, &current, &next)?;
            current = next;
        }
        Ok(clamped)
    }

    /// Full paths for the streams of `seed` in `streams`.
    pub fn sample_paths(&self, seed: u64, streams: Range<u64>) -> Result<Vec<SamplePath>> {
        let n_paths = streams.end.saturating_sub(streams.start) as usize;
        let first = streams.start;
        let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(self.steps + 1); n_paths];
        self.run(seed, streams, |k, before, after| {
            for (v, (&x, &y)) in values.iter_mut().zip(before.iter().zip(after)) {
                if k == 0 {
                    v.push(x);
                }
                v.push(y);
            }
            Ok(())
        })?;
        let p = self.model.params();
        let below = p.b() * (1.0 - 1e-12);
        let times = self.times();
        Ok(values
            .into_iter()
            .enumerate()
            .map(|(i, values)| SamplePath {
                times: times.clone(),
                meta: PathMeta {
                    sampler: SamplerKind::HouseMoving,
                    seed,
                    stream: first + i as u64,
                    steps: self.steps,
                    dt: 1.0 / self.steps as f64,
                    delta: p.delta(),
                    a: p.a(),
                    b: Some(p.b()),
                    eta: None,
                    attempts: None,
                    crossing_correction: false,
                    clamped: values.iter().filter(|&&v| v == below).count(),
                },
                values,
            })
            .collect())
    }
}

/// One house-moving path with `steps` uniform steps on stream `stream`.
pub fn sample_house_path(model: &HouseMovingModel, steps: usize, stream: RngStream) -> Result<SamplePath> {
    let s = HousePathSampler::new(model, steps)?;
    let mut paths = s.sample_paths(stream.seed, stream.stream..stream.stream + 1)?;
    Ok(paths.pop().expect("at least one path"))
}
