use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{conf, rel_err, Case, SuiteConfig};
use crate::error::Result;
use crate::housemoving::{theta_oracle_q1_half, theta_oracle_q1_half_origin, HouseMovingModel, MASS_TOL};
use crate::kernels::{hitting_density, kent_hitting_cdf, max_dist_bridge, max_dist_eta_derivative, q1, ProcessParams};
use crate::quad::TanhSinh;
use crate::specfun::zero_table;

pub(super) const DELTAS: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 6.0, 10.0];
pub(super) const FIGURE_DELTAS: [f64; 4] = [2.0, 3.0, 6.0, 10.0];
const FIGURE_B: f64 = 1.5;

pub(super) fn model(cfg: &SuiteConfig, delta: f64, a: f64, b: f64) -> Result<HouseMovingModel> {
    HouseMovingModel::new(ProcessParams::new(delta, a, b)?, cfg.policy)
}

fn quad() -> TanhSinh {
    TanhSinh::with_tol(1e-10)
}

pub(super) fn normalization(cfg: &SuiteConfig) -> Vec<Case> {
    let mut jobs = Vec::new();
    for delta in DELTAS {
        for a in [0.0, 0.4, 1.0] {
            for t in [0.05, 0.5, 0.95] {
                jobs.push((delta, a, 1.5, 0.0, a, t));
            }
        }
        for b in [1.0, 1.5] {
            for s in [0.2, 0.6] {
                for xf in [0.07, 0.5, 0.93] {
                    for dt in [0.05, 0.3] {
                        jobs.push((delta, 0.0, b, s, xf * b, s + dt));
                    }
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(delta, a, b, s, x, t)| {
            let mass = model(cfg, delta, a, b).and_then(|m| m.transition_mass(s, x, t));
            let c = conf(&[("delta", delta), ("a", a), ("b", b), ("s", s), ("x", x), ("t", t)]);
            Case::near(c, "mass", mass, 1.0, MASS_TOL)
        })
        .collect()
}

pub(super) fn chapman_kolmogorov(cfg: &SuiteConfig) -> Vec<Case> {
    let mut jobs = Vec::new();
    for delta in DELTAS {
        for b in [1.0, 1.5] {
            for (s, u, t) in [(0.1, 0.4, 0.8), (0.3, 0.5, 0.6), (0.5, 0.7, 0.95)] {
                for (xf, yf) in [(0.2, 0.6), (0.8, 0.33), (0.53, 0.93)] {
                    jobs.push((delta, b, s, u, t, xf * b, yf * b));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(delta, b, s, u, t, x, y)| {
            let defect = model(cfg, delta, 0.0, b).and_then(|m| {
                let lhs = quad()
                    .integrate_split(
                        |z| Ok(m.transition_density(s, x, u, z)?.value * m.transition_density(u, z, t, y)?.value),
                        0.0,
                        b,
                        &[x, y],
                    )?
                    .value;
                Ok((lhs - m.transition_density(s, x, t, y)?.value).abs())
            });
            let c = conf(&[("delta", delta), ("b", b), ("s", s), ("u", u), ("t", t), ("x", x), ("y", y)]);
            Case::at_most(c, "abs_defect", defect, 1e-6)
        })
        .collect()
}

pub(super) fn eta_derivative(cfg: &SuiteConfig) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs = Vec::new();
    while jobs.len() < 50 {
        let delta = rng.random_range(0.5..10.0);
        let c = rng.random_range(0.8..1.5);
        let tau = rng.random_range(0.05..1.0);
        let x = if rng.random::<f64>() < 0.1 { 0.0 } else { c * rng.random_range(0.0..0.95) };
        let y = c * rng.random_range(0.02..0.95);
        // keep configurations whose bridge-maximum law is not numerically 0 or 1
        let p = match ProcessParams::with_delta(delta) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if let Ok(m) = max_dist_bridge(&p, c, tau, x, y, &cfg.policy) {
            if !(1e-4..=1.0 - 1e-4).contains(&m.value) {
                continue;
            }
        }
        jobs.push((delta, c, tau, x, y));
    }
    jobs.par_iter()
        .map(|&(delta, c, tau, x, y)| {
            let err = ProcessParams::with_delta(delta).and_then(|p| {
                let h = 1e-4 * c;
                let m = |e: f64| max_dist_bridge(&p, e, tau, x, y, &cfg.policy).map(|v| v.value);
                let fd = (m(c + h)? - m(c - h)?) / (2.0 * h);
                let series = max_dist_eta_derivative(&p, c, tau, x, y, &cfg.policy)?;
                Ok(rel_err(series, fd))
            });
            let k = conf(&[("delta", delta), ("c", c), ("tau", tau), ("x", x), ("y", y)]);
            Case::at_most(k, "rel_err_vs_fd", err, 1e-5)
        })
        .collect()
}

pub(super) fn theta_oracle(cfg: &SuiteConfig) -> Vec<Case> {
    let (b, eta) = (0.8, 0.2);
    let mut jobs = Vec::new();
    for tau in [0.05, 0.1, 0.3, 1.0] {
        for x in [0.0, 0.2, 0.4, 0.6, 0.8] {
            for y in [0.1, 0.3, 0.5, 0.7, 0.9] {
                jobs.push((tau, x, y));
            }
        }
    }
    jobs.par_iter()
        .map(|&(tau, x, y)| {
            let err = ProcessParams::new(3.0, 0.0, b).and_then(|p| {
                let series = q1(&p, b + eta, 0.0, x, tau, y, &cfg.policy)?.value;
                let theta = if x == 0.0 {
                    theta_oracle_q1_half_origin(&p, b + eta, tau, y)?
                } else {
                    theta_oracle_q1_half(&p, b + eta, 0.0, x, tau, y)?
                };
                Ok(rel_err(series, theta))
            });
            let c = conf(&[("c", b + eta), ("tau", tau), ("x", x), ("y", y)]);
            Case::at_most(c, "rel_err", err, 1e-8)
        })
        .collect()
}

pub(super) fn reversal(cfg: &SuiteConfig) -> Vec<Case> {
    let delta = cfg.delta.unwrap_or(3.0);
    let b = FIGURE_B;
    let applies = delta == 3.0;
    let mut jobs = Vec::new();
    for k in 1..=9 {
        for i in 0..50 {
            jobs.push((k as f64 / 10.0, b * (i as f64 + 0.5) / 50.0));
        }
    }
    let m = model(cfg, delta, 0.0, b);
    let mut cases: Vec<Case> = jobs
        .par_iter()
        .map(|&(t, y)| {
            let gap = m.clone().and_then(|m| {
                let (l, r) = (m.marginal_density(t, y)?.value, m.marginal_density(1.0 - t, b - y)?.value);
                Ok(rel_err(l, r))
            });
            let c = conf(&[("delta", delta), ("t", t), ("y", y)]);
            if applies {
                Case::at_most(c, "rel_gap", gap, 1e-8)
            } else {
                Case::info(c, "rel_gap", gap)
            }
        })
        .collect();
    let mean = m.and_then(|m| m.expect(0.5, |y| y));
    let c = conf(&[("delta", delta), ("t", 0.5)]);
    cases.push(if applies { Case::near(c, "mean", mean, b / 2.0, 1e-6) } else { Case::info(c, "mean", mean) });
    cases
}

// Hitting-time mass: the mass before t0 is of order e^{-20} and the mass
// after the last point of order e^{-32}.
fn hitting_mass_of(p: &ProcessParams, cfg: &SuiteConfig) -> Result<(f64, f64)> {
    let (a, b) = (p.a(), p.b());
    let j1 = zero_table(p.nu(), 1)?.zeros()[0];
    let mut t0 = (b - a).powi(2) / 4.0;
    while kent_hitting_cdf(p, t0, &cfg.policy)?.value > 1e-13 {
        t0 *= 0.5;
    }
    let t_end = 64.0 * b * b / (j1 * j1);
    let f = |t: f64| Ok(hitting_density(p, t, &cfg.policy)?.value);
    let splits: Vec<f64> = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0].iter().map(|s| s * b * b).collect();
    let mass = quad().integrate_split(f, t0, t_end, &splits)?.value;
    let half = quad().integrate_split(f, t0, 0.5 * b * b, &splits)?.value;
    let cdf = kent_hitting_cdf(p, 0.5 * b * b, &cfg.policy)?.value;
    Ok((mass, (half - cdf).abs()))
}

pub(super) fn hitting_mass(cfg: &SuiteConfig) -> Vec<Case> {
    let mut jobs = Vec::new();
    for delta in DELTAS {
        for a in [0.0, 0.5] {
            jobs.push((delta, a));
        }
    }
    jobs.par_iter()
        .flat_map_iter(|&(delta, a)| {
            let r = ProcessParams::new(delta, a, 1.0).and_then(|p| hitting_mass_of(&p, cfg));
            let c = conf(&[("delta", delta), ("a", a), ("b", 1.0)]);
            let (mass, gap) = match r {
                Ok((m, g)) => (Ok(m), Ok(g)),
                Err(e) => (Err(e.clone()), Err(e)),
            };
            [Case::near(c.clone(), "total_mass", mass, 1.0, MASS_TOL), Case::at_most(c, "cdf_vs_density", gap, 1e-8)]
        })
        .collect()
}

pub(super) fn two_route(cfg: &SuiteConfig) -> Vec<Case> {
    const CONFIGS: [(f64, f64, f64, f64); 9] = [
        (0.0, 0.2, 0.3, 0.4),
        (0.0, 0.2, 0.6, 0.9),
        (0.1, 0.3, 0.4, 0.5),
        (0.2, 0.7, 0.5, 0.6),
        (0.3, 0.5, 0.7, 0.8),
        (0.4, 0.9, 0.6, 0.7),
        (0.5, 0.1, 0.8, 0.3),
        (0.25, 0.6, 0.75, 0.2),
        (0.6, 0.4, 0.9, 0.85),
    ];
    let mut jobs = Vec::new();
    for delta in DELTAS {
        for c in CONFIGS {
            jobs.push((delta, c));
        }
    }
    jobs.par_iter()
        .map(|&(delta, (s, x, t, y))| {
            let err = model(cfg, delta, 0.2, 1.0).and_then(|m| {
                Ok(rel_err(m.transition_density(s, x, t, y)?.value, m.transition_density_via_hitting(s, x, t, y)?))
            });
            let c = conf(&[("delta", delta), ("a", 0.2), ("b", 1.0), ("s", s), ("x", x), ("t", t), ("y", y)]);
            Case::at_most(c, "rel_err", err, 1e-10)
        })
        .collect()
}

fn sign_changes(values: &[f64]) -> usize {
    let slopes: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    slopes.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

// E[g(H(s)) h(H(t))] by integrating the transition density against the
// time-s marginal, and through the time-t marginal times the law of H(s)
// given H(t) = y, which is the sub-barrier Bessel bridge.
fn cylinder_two_ways<G, H>(m: &HouseMovingModel, s: f64, t: f64, g: G, h: H) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let (p, a, b) = (m.params(), m.params().a(), m.params().b());
    let pol = m.policy();
    let outer = TanhSinh::with_tol(1e-9);
    let direct = outer
        .integrate(
            |x| {
                let inner =
                    quad().integrate_split(|y| Ok(h(y) * m.transition_density(s, x, t, y)?.value), 0.0, b, &[x])?;
                Ok(g(x) * m.marginal_density(s, x)?.value * inner.value)
            },
            0.0,
            b,
        )?
        .value;
    let through_t = outer
        .integrate(
            |y| {
                let whole = q1(p, b, 0.0, a, t, y, pol)?.value;
                if whole == 0.0 {
                    return Ok(0.0);
                }
                let inner = quad().integrate_split(
                    |x| Ok(g(x) * q1(p, b, 0.0, a, s, x, pol)?.value * q1(p, b, s, x, t, y, pol)?.value),
                    0.0,
                    b,
                    &[y],
                )?;
                Ok(h(y) * m.marginal_density(t, y)?.value * inner.value / whole)
            },
            0.0,
            b,
        )?
        .value;
    Ok((direct, through_t))
}

pub(super) fn figures(cfg: &SuiteConfig) -> Vec<Case> {
    let b = FIGURE_B;
    let grid = 256;
    let mut jobs = Vec::new();
    for delta in FIGURE_DELTAS {
        for k in 1..=9 {
            jobs.push((delta, k));
        }
    }
    let curves: Vec<_> = jobs
        .par_iter()
        .map(|&(delta, k)| model(cfg, delta, 0.0, b).and_then(|m| m.density_curve(k as f64 / 10.0, grid)))
        .collect();
    let mut cases = Vec::new();
    for (&(delta, k), curve) in jobs.iter().zip(&curves) {
        let c = conf(&[("delta", delta), ("t", k as f64 / 10.0)]);
        let r = curve.as_ref().map_err(Clone::clone);
        cases.push(Case::near(c.clone(), "curve_mass", r.clone().map(|cv| cv.mass), 1.0, MASS_TOL));
        let bad = r.clone().map(|cv| {
            let inside = cv.y_grid.iter().all(|&y| y > 0.0 && y < b);
            (cv.values.iter().filter(|v| !(v.is_finite() && **v >= 0.0)).count() + usize::from(!inside)) as f64
        });
        cases.push(Case::at_most(c.clone(), "support_violations", bad, 0.0));
        if delta == 3.0 {
            let mirror = jobs.iter().position(|&(d, j)| d == delta && j == 10 - k).expect("t grid is symmetric");
            let gap = match (r.clone(), curves[mirror].as_ref()) {
                (Ok(l), Ok(rv)) => {
                    Ok(l.values.iter().zip(rv.values.iter().rev()).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max))
                }
                (Err(e), _) => Err(e),
                (_, Err(e)) => Err(e.clone()),
            };
            cases.push(Case::at_most(c.clone(), "reversal_rel_gap", gap, 1e-8));
        }
        if delta == 10.0 && k == 5 {
            cases.push(Case::info(c, "slope_sign_changes", r.clone().map(|cv| sign_changes(&cv.values) as f64)));
        }
    }
    let t_grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let means: Vec<_> =
        FIGURE_DELTAS.par_iter().map(|&d| model(cfg, d, 0.0, b).and_then(|m| m.mean_curve(&t_grid))).collect();
    for (&delta, mc) in FIGURE_DELTAS.iter().zip(&means) {
        let c = conf(&[("delta", delta)]);
        let r = mc.as_ref().map_err(Clone::clone);
        let ends = r.clone().map(|v| (v[0].1 - 0.0).abs() + (v[v.len() - 1].1 - b).abs());
        cases.push(Case::at_most(c.clone(), "mean_endpoint_error", ends, 0.0));
        let outside = r.clone().map(|v| v.iter().filter(|(_, m)| !(*m >= 0.0 && *m <= b)).count() as f64);
        cases.push(Case::at_most(c.clone(), "mean_outside_support", outside, 0.0));
        if delta == 3.0 {
            cases.push(Case::near(c, "mean_mid", r.clone().map(|v| v[100].1), b / 2.0, 1e-6));
        }
    }
    let mut cyl = Vec::new();
    for delta in [2.0, 3.0, 6.0] {
        for (s, t) in [(0.3, 0.7), (0.2, 0.5)] {
            for pair in 0..2 {
                cyl.push((delta, s, t, pair));
            }
        }
    }
    let cyl_cases: Vec<Case> = cyl
        .par_iter()
        .map(|&(delta, s, t, pair)| {
            let gap = model(cfg, delta, 0.0, b).and_then(|m| {
                let (u, v) = if pair == 0 {
                    cylinder_two_ways(&m, s, t, |x| x, |y| y * y)?
                } else {
                    cylinder_two_ways(&m, s, t, |x| (-x).exp(), |y| (3.0 * y).sin())?
                };
                Ok((u - v).abs())
            });
            let c = conf(&[("delta", delta), ("s", s), ("t", t), ("functional", pair as f64)]);
            Case::at_most(c, "cylinder_two_way_gap", gap, 1e-6)
        })
        .collect();
    cases.extend(cyl_cases);
    cases
}
