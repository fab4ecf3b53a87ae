use std::cell::RefCell;

use rand::Rng;
use rayon::prelude::*;

use super::analytic::model;
use super::{conf, ks_critical_999, ks_statistic, Case, SuiteConfig};
use crate::error::{Error, Result};
use crate::housemoving::HouseMovingModel;
use crate::kernels::{kent_hitting_cdf, max_dist_bridge, theta, ProcessParams, SeriesPolicy};
use crate::quad::TanhSinh;
use crate::sampler::{
    bessel_step, ensemble, sample_bessel_path, uniform_grid, BridgeMethod, BridgeSampler, ConditionedOptions,
    HousePathSampler, RngStream, TabulatedCdf,
};
use crate::specfun::zero_table;

// Crossing probabilities below e^{-40} are treated as zero.
const CROSSING_CUTOFF: f64 = 40.0;

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03)).rotate_left(17)
}

// CDF table of a density that vanishes at both ends of (lo, hi).
fn reference_cdf<F>(f: F, lo: f64, hi: f64) -> Result<TabulatedCdf>
where
    F: Fn(f64) -> Result<f64>,
{
    TabulatedCdf::from_density(|x| if x <= lo || x >= hi { Ok(0.0) } else { f(x) }, lo, hi, 4096)
}

// Probability that the bridge x → y over dt stays below c.
fn stay_below(p: &ProcessParams, c: f64, dt: f64, x: f64, y: f64, policy: &SeriesPolicy) -> Result<f64> {
    if x >= c || y >= c {
        return Ok(0.0);
    }
    if 2.0 * (c - x) * (c - y) / dt > CROSSING_CUTOFF {
        return Ok(1.0);
    }
    if p.is_half_order() {
        theta::theta_max_dist_half(c, dt, x, y)
    } else {
        Ok(max_dist_bridge(p, c, dt, x, y, policy)?.value)
    }
}

// First time the exact skeleton with step dt reaches b; crossings between
// grid points are drawn from the exact bridge law for δ = 3 and from the
// Brownian-bridge law otherwise, and placed uniformly inside the step.
fn first_passage(p: &ProcessParams, dt: f64, max_steps: usize, stream: RngStream) -> Result<f64> {
    let b = p.b();
    let mut rng = stream.rng();
    let mut x = p.a();
    for k in 0..max_steps {
        let y = bessel_step(p.delta(), x, dt, &mut rng)?;
        let crossed = y >= b || {
            let e = 2.0 * (b - x) * (b - y) / dt;
            let stay = if e > CROSSING_CUTOFF {
                1.0
            } else if p.is_half_order() {
                theta::theta_max_dist_half(b, dt, x, y)?
            } else {
                1.0 - (-e).exp()
            };
            stay < 1.0 && rng.random::<f64>() >= stay
        };
        if crossed {
            return Ok((k as f64 + rng.random::<f64>()) * dt);
        }
        x = y;
    }
    Ok(f64::INFINITY)
}

// KS distance against a fallible CDF; the first evaluation error wins.
fn ks_fallible<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = RefCell::new(None);
    let d = ks_statistic(samples, |x| match cdf(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

pub(super) fn hitting_mc(cfg: &SuiteConfig) -> Vec<Case> {
    let n = cfg.paths_or(100_000);
    let dt = 1e-3;
    [(3.0, 0.0, 1.0), (2.0, 0.3, 1.0)]
        .iter()
        .enumerate()
        .flat_map(|(i, &(delta, a, b))| {
            let run = || -> Result<(f64, usize)> {
                let p = ProcessParams::new(delta, a, b)?;
                let j1 = zero_table(p.nu(), 1)?.zeros()[0];
                let max_steps = (64.0 * b * b / (j1 * j1) / dt).ceil() as usize;
                let times = ensemble(sub_seed(cfg.seed, i as u64), n, |st| first_passage(&p, dt, max_steps, st))?;
                let censored = times.iter().filter(|t| t.is_infinite()).count();
                let d = ks_fallible(&times, |t| {
                    if t.is_infinite() {
                        Ok(1.0)
                    } else if t <= 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(kent_hitting_cdf(&p, t, &cfg.policy)?.value)
                    }
                })?;
                Ok((d, censored))
            };
            let c = conf(&[("delta", delta), ("a", a), ("b", b), ("dt", dt)]);
            let r = run();
            let censored = r.as_ref().map(|x| x.1 as f64).map_err(Clone::clone);
            let mut cases = vec![Case::at_most(c.clone(), "ks", r.map(|x| x.0), 0.015).with_samples(n)];
            cases.push(Case::info(c, "censored", censored).with_samples(n));
            cases
        })
        .collect()
}

pub(super) fn weak_convergence(cfg: &SuiteConfig) -> Vec<Case> {
    let delta = cfg.delta.unwrap_or(3.0);
    let (a, b, steps) = (0.0, 1.5, 512);
    let n = cfg.paths_or(100_000);
    let etas = [0.2, 0.1, 0.05, 0.02];
    let grid = uniform_grid(steps, 1.0);
    let setup = || -> Result<(HouseMovingModel, TabulatedCdf, BridgeSampler)> {
        let m = model(cfg, delta, a, b)?;
        let house = reference_cdf(|y| Ok(m.marginal_density(0.5, y)?.value), 0.0, b)?;
        let s = BridgeSampler::new(*m.params(), b, &grid, BridgeMethod::Auto)?;
        Ok((m, house, s))
    };
    let (m, house, sampler) = match setup() {
        Ok(x) => x,
        Err(e) => return vec![Case::at_most(conf(&[("delta", delta)]), "setup", Err(e), 0.0)],
    };
    let correction = m.params().is_half_order();
    let opts = ConditionedOptions { crossing_correction: correction, ..Default::default() };
    let mut cases = Vec::new();
    let mut ks_house = Vec::new();
    for (i, &eta) in etas.iter().enumerate() {
        let mids = ensemble(sub_seed(cfg.seed, i as u64), n, |st| {
            Ok(sampler.sample_conditioned(eta, &opts, st)?.values[steps / 2])
        });
        let c = conf(&[
            ("delta", delta),
            ("eta", eta),
            ("steps", steps as f64),
            ("crossing_correction", f64::from(u8::from(correction))),
        ]);
        let d_house = mids.as_ref().map(|v| ks_statistic(v, |y| house.cdf(y))).map_err(Clone::clone);
        let d_cond = mids.as_ref().map_err(Clone::clone).and_then(|v| {
            let t = reference_cdf(|y| m.conditioned_bridge_density(eta, 0.5, y), 0.0, b + eta)?;
            Ok(ks_statistic(v, |y| t.cdf(y)))
        });
        ks_house.push(d_house.clone());
        if i == etas.len() - 1 {
            cases.push(Case::at_most(c.clone(), "ks_vs_house", d_house, 0.02).with_samples(n));
        } else {
            cases.push(Case::info(c.clone(), "ks_vs_house", d_house).with_samples(n));
        }
        let allowance = 2e-3;
        let cond = if correction {
            Case::at_most(c, "ks_vs_conditioned", d_cond, ks_critical_999(n) + allowance)
        } else {
            Case::info(c, "ks_vs_conditioned", d_cond)
        };
        cases.push(cond.with_samples(n));
    }
    let increases = ks_house
        .into_iter()
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.windows(2).filter(|w| w[1] >= w[0]).count() as f64);
    cases.push(Case::at_most(conf(&[("delta", delta)]), "ks_non_decreasing_steps", increases, 0.0));
    cases
}

struct RnSample {
    end: f64,
    weight: f64,
}

pub(super) fn rn_density(cfg: &SuiteConfig) -> Vec<Case> {
    let n = cfg.paths_or(200_000);
    let mut jobs = Vec::new();
    for (delta, a, b) in [(3.0, 0.0, 1.5), (2.0, 0.3, 1.2)] {
        for t in [0.3, 0.7] {
            jobs.push((delta, a, b, t));
        }
    }
    let mut cases = Vec::new();
    for (i, &(delta, a, b, t)) in jobs.iter().enumerate() {
        let c = conf(&[("delta", delta), ("a", a), ("b", b), ("t", t)]);
        let run = || -> Result<(HouseMovingModel, Vec<RnSample>)> {
            let m = model(cfg, delta, a, b)?;
            let p = *m.params();
            let grid = [0.0, 0.5 * t, t];
            let samples = ensemble(sub_seed(cfg.seed, i as u64), n, |st| {
                let path = sample_bessel_path(&p, &grid, st)?;
                let mut w = 1.0;
                for k in 0..2 {
                    w *= stay_below(&p, b, grid[k + 1] - grid[k], path.values[k], path.values[k + 1], &cfg.policy)?;
                }
                let end = path.values[2];
                if w > 0.0 {
                    w *= m.rn_density(t, end, true)?;
                }
                Ok(RnSample { end, weight: w })
            })?;
            Ok((m, samples))
        };
        let (m, samples) = match run() {
            Ok(x) => x,
            Err(e) => {
                cases.push(Case::at_most(c, "setup", Err(e), 0.0));
                continue;
            }
        };
        let functionals: [(&str, Box<dyn Fn(f64) -> f64>); 4] = [
            ("mass", Box::new(|_| 1.0)),
            ("mean", Box::new(|x| x)),
            ("second_moment", Box::new(|x| x * x)),
            ("below_half_b", Box::new(move |x| if x <= 0.5 * b { 1.0 } else { 0.0 })),
        ];
        for (name, f) in functionals.iter() {
            let vals: Vec<f64> = samples.iter().map(|s| f(s.end) * s.weight).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            let exact = if *name == "below_half_b" {
                TanhSinh::with_tol(1e-10)
                    .integrate(|y| Ok(m.marginal_density(t, y)?.value), 0.0, 0.5 * b)
                    .map(|q| q.value)
            } else {
                m.expect(t, f)
            };
            let case = match exact {
                Ok(e) => Case::near(c.clone(), name, Ok(mean), e, 3.0 * se),
                Err(err) => Case::near(c.clone(), name, Err(err), 0.0, 0.0),
            };
            cases.push(case.with_samples(n));
        }
    }
    cases
}

pub(super) fn joint_max(cfg: &SuiteConfig) -> Vec<Case> {
    let delta = cfg.delta.unwrap_or(3.0);
    let (a, b, t, steps) = (0.0, 1.5, 0.5, 128);
    let n = cfg.paths_or(100_000);
    let levels = [0.6, 0.9, 1.2, 1.4];
    let zs = [0.3, 0.6, 0.9, 1.2, 1.4];
    let mut cases = Vec::new();
    let run = || -> Result<(HouseMovingModel, Vec<Vec<f64>>, Vec<f64>, usize)> {
        let m = model(cfg, delta, a, b)?;
        let p = *m.params();
        let sampler = HousePathSampler::new(&m, steps)?;
        let dt = 1.0 / steps as f64;
        let last = (t * steps as f64).round() as usize;
        let mut weights = vec![vec![1.0; levels.len()]; n];
        let mut at_t = Vec::new();
        let mut failure: Option<Error> = None;
        let clamped = sampler.run(sub_seed(cfg.seed, 0), 0..n as u64, |k, before, after| {
            if k >= last {
                return Ok(());
            }
            let r: Result<()> =
                weights.par_iter_mut().zip(before.par_iter().zip(after.par_iter())).try_for_each(|(w, (&x, &y))| {
                    for (wj, &lvl) in w.iter_mut().zip(&levels) {
                        if *wj == 0.0 {
                            continue;
                        }
                        let num = stay_below(&p, lvl, dt, x, y, &cfg.policy)?;
                        if num < 1.0 {
                            *wj *= num / stay_below(&p, b, dt, x, y, &cfg.policy)?;
                        }
                    }
                    Ok(())
                });
            if let Err(e) = r {
                failure.get_or_insert(e);
            }
            if k + 1 == last {
                at_t = after.to_vec();
            }
            Ok(())
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((m, weights, at_t, clamped))
    };
    match run() {
        Err(e) => cases.push(Case::at_most(conf(&[("delta", delta)]), "setup", Err(e), 0.0)),
        Ok((m, weights, at_t, clamped)) => {
            for (j, &lvl) in levels.iter().enumerate() {
                let sup = zs
                    .iter()
                    .filter(|&&z| z <= lvl)
                    .chain(std::iter::once(&lvl))
                    .map(|&z| {
                        let est = weights.iter().zip(&at_t).filter(|(_, &h)| h <= z).map(|(w, _)| w[j]).sum::<f64>()
                            / n as f64;
                        Ok((est - m.joint_max_cdf(t, lvl, z)?.value).abs())
                    })
                    .try_fold(0.0f64, |acc, d: Result<f64>| Ok::<f64, Error>(acc.max(d?)));
                let c = conf(&[("delta", delta), ("t", t), ("x_bar", lvl), ("steps", steps as f64)]);
                cases.push(Case::at_most(c, "sup_cdf_gap", sup, 0.02).with_samples(n));
            }
            let c = conf(&[("delta", delta), ("steps", steps as f64)]);
            cases.push(Case::at_most(c, "values_reaching_barrier", Ok(clamped as f64), 0.0).with_samples(n));
        }
    }
    let mut full = Vec::new();
    for d in super::analytic::DELTAS {
        for tt in [0.2, 0.5, 0.8] {
            full.push((d, tt));
        }
    }
    let full_cases: Vec<Case> = full
        .par_iter()
        .map(|&(d, tt)| {
            let v = model(cfg, d, a, b).and_then(|m| Ok(m.joint_max_cdf(tt, b, b)?.value));
            Case::near(conf(&[("delta", d), ("t", tt)]), "cdf_at_barrier", v, 1.0, 1e-6)
        })
        .collect();
    cases.extend(full_cases);
    cases
}
