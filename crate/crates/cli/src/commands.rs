use bessel_house::housemoving::{HouseMovingModel, MASS_TOL};
use bessel_house::kernels::{hitting_density, kent_hitting_cdf, max_dist_bridge, ProcessParams, SeriesPolicy};
use bessel_house::sampler::{
    ensemble, sample_bessel_bridge, sample_bessel_path, sample_conditioned_bridge, uniform_grid, BridgeMethod,
    ConditionedOptions, HousePathSampler, SamplePath,
};
use bessel_house::validate::{resolve_suites, run_suite, time_budget, SuiteConfig, SUITES};
use bessel_house::Error;
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::output::{emit, render_paths, render_table, Meta, Table};
use crate::CliError;

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical(e: Error, delta: f64, t: f64, c: f64) -> CliError {
    CliError::Numerical(format!("{e} (delta={delta}, t={t}, c={c})"))
}

fn policy_of(p: &PolicyArgs) -> Result<SeriesPolicy, CliError> {
    let policy = p.policy();
    policy.validate().map_err(usage)?;
    Ok(policy)
}

fn grid_pairs(deltas: &[f64], ts: &[f64]) -> Vec<(f64, f64)> {
    deltas.iter().flat_map(|&d| ts.iter().map(move |&t| (d, t))).collect()
}

fn models(deltas: &[f64], a: f64, b: f64, policy: SeriesPolicy) -> Result<Vec<HouseMovingModel>, CliError> {
    deltas
        .iter()
        .map(|&d| {
            let p = ProcessParams::new(d, a, b).map_err(usage)?;
            HouseMovingModel::new(p, policy).map_err(|e| numerical(e, d, 1.0, b))
        })
        .collect()
}

fn sign_changes(values: &[f64]) -> usize {
    let slopes: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    slopes.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

pub fn density(args: &DensityArgs) -> Result<(), CliError> {
    let deltas = parse_list(&args.delta, "delta")?;
    let ts = parse_list(&args.t, "t")?;
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(CliError::Usage(format!("density times must lie in (0,1), got {t}")));
    }
    if args.grid == 0 {
        return Err(CliError::Usage("grid must be at least 1".into()));
    }
    let policy = policy_of(&args.policy)?;
    let models = models(&deltas, args.a, args.b, policy)?;
    let items: Vec<(usize, f64)> = (0..deltas.len()).flat_map(|i| ts.iter().map(move |&t| (i, t))).collect();
    let curves = items
        .par_iter()
        .map(|&(i, t)| models[i].density_curve(t, args.grid).map_err(|e| numerical(e, deltas[i], t, args.b)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (&(i, t), c) in items.iter().zip(&curves) {
        for (y, v) in c.y_grid.iter().zip(&c.values) {
            rows.push(vec![deltas[i], t, *y, *v]);
        }
        checks.push(json!({
            "delta": deltas[i],
            "t": t,
            "mass": c.mass,
            "unit_mass": c.check_mass(MASS_TOL).is_ok(),
            "slope_sign_changes": sign_changes(&c.values),
        }));
    }
    let mut meta = Meta::new("density", args, policy);
    meta.checks = Some(json!({ "mass_tolerance": MASS_TOL, "curves": checks }));
    let table = Table { columns: vec!["delta", "t", "y", "density"], rows };
    emit(&render_table(&meta, &table, args.out.format)?, args.out.output.as_deref())
}

pub fn mean(args: &MeanArgs) -> Result<(), CliError> {
    let deltas = parse_list(&args.delta, "delta")?;
    let ts = parse_list(&args.t, "t")?;
    if let Some(t) = ts.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
        return Err(CliError::Usage(format!("mean times must lie in [0,1], got {t}")));
    }
    let policy = policy_of(&args.policy)?;
    let models = models(&deltas, args.a, args.b, policy)?;
    let items: Vec<(usize, f64)> = (0..deltas.len()).flat_map(|i| ts.iter().map(move |&t| (i, t))).collect();
    let means = items
        .par_iter()
        .map(|&(i, t)| Ok(models[i].mean_curve(&[t]).map_err(|e| numerical(e, deltas[i], t, args.b))?[0].1))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = items.iter().zip(&means).map(|(&(i, t), &m)| vec![deltas[i], t, m]).collect();
    let meta = Meta::new("mean", args, policy);
    let table = Table { columns: vec!["delta", "t", "mean"], rows };
    emit(&render_table(&meta, &table, args.out.format)?, args.out.output.as_deref())
}

pub fn maxdist(args: &MaxdistArgs) -> Result<(), CliError> {
    let deltas = parse_list(&args.delta, "delta")?;
    let ts = parse_list(&args.t, "t")?;
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0)) {
        return Err(CliError::Usage(format!("bridge durations must be positive, got {t}")));
    }
    if !(args.x >= 0.0 && args.y >= 0.0 && args.x < args.c && args.y < args.c) {
        return Err(CliError::Usage(format!("need 0 <= x, y < c, got x={}, y={}, c={}", args.x, args.y, args.c)));
    }
    let policy = policy_of(&args.policy)?;
    let params = deltas.iter().map(|&d| ProcessParams::with_delta(d).map_err(usage)).collect::<Result<Vec<_>, _>>()?;
    let items = grid_pairs(&deltas, &ts);
    let values = items
        .par_iter()
        .enumerate()
        .map(|(k, &(d, t))| {
            let p = &params[k / ts.len()];
            Ok(max_dist_bridge(p, args.c, t, args.x, args.y, &policy).map_err(|e| numerical(e, d, t, args.c))?.value)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = items.iter().zip(&values).map(|(&(d, t), &v)| vec![d, t, args.c, args.x, args.y, v]).collect();
    let meta = Meta::new("maxdist", args, policy);
    let table = Table { columns: vec!["delta", "t", "c", "x", "y", "probability"], rows };
    emit(&render_table(&meta, &table, args.out.format)?, args.out.output.as_deref())
}

pub fn hitting(args: &HittingArgs) -> Result<(), CliError> {
    let deltas = parse_list(&args.delta, "delta")?;
    let ts = parse_list(&args.t, "t")?;
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0)) {
        return Err(CliError::Usage(format!("hitting times must be positive, got {t}")));
    }
    let policy = policy_of(&args.policy)?;
    let params =
        deltas.iter().map(|&d| ProcessParams::new(d, args.a, args.b).map_err(usage)).collect::<Result<Vec<_>, _>>()?;
    let items = grid_pairs(&deltas, &ts);
    let values = items
        .par_iter()
        .enumerate()
        .map(|(k, &(d, t))| {
            let p = &params[k / ts.len()];
            let err = |e| numerical(e, d, t, args.b);
            Ok((
                hitting_density(p, t, &policy).map_err(err)?.value,
                kent_hitting_cdf(p, t, &policy).map_err(err)?.value,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = items.iter().zip(&values).map(|(&(d, t), &(f, c))| vec![d, t, f, c]).collect();
    let meta = Meta::new("hitting", args, policy);
    let table = Table { columns: vec!["delta", "t", "density", "cdf"], rows };
    emit(&render_table(&meta, &table, args.out.format)?, args.out.output.as_deref())
}

pub fn sample(args: &SampleArgs) -> Result<(), CliError> {
    if args.paths == 0 || args.steps == 0 {
        return Err(CliError::Usage("paths and steps must be at least 1".into()));
    }
    let policy = policy_of(&args.policy)?;
    let p = match args.sampler {
        SamplerChoice::Bessel => ProcessParams::new(args.delta, args.a, args.a.max(0.0) + 1.0),
        _ => ProcessParams::new(args.delta, args.a, args.b),
    }
    .map_err(usage)?;
    let method = match args.method {
        MethodChoice::Auto => BridgeMethod::Auto,
        MethodChoice::InverseCdf => BridgeMethod::InverseCdf,
        MethodChoice::BrownianNorm => BridgeMethod::BrownianNorm,
    };
    let grid = uniform_grid(args.steps, 1.0);
    let err = |e| numerical(e, args.delta, 1.0, args.b);
    let paths: Vec<SamplePath> = match args.sampler {
        SamplerChoice::House => {
            let model = HouseMovingModel::new(p, policy).map_err(err)?;
            let sampler = HousePathSampler::new(&model, args.steps).map_err(err)?;
            sampler.sample_paths(args.seed, 0..args.paths as u64).map_err(err)?
        }
        SamplerChoice::Bessel => ensemble(args.seed, args.paths, |s| sample_bessel_path(&p, &grid, s)).map_err(err)?,
        SamplerChoice::Bridge => {
            ensemble(args.seed, args.paths, |s| sample_bessel_bridge(&p, args.b, &grid, method, s)).map_err(err)?
        }
        SamplerChoice::Conditioned => {
            if !(args.eta > 0.0) {
                return Err(CliError::Usage(format!("eta must be positive, got {}", args.eta)));
            }
            if args.crossing_correction && !p.is_half_order() {
                return Err(CliError::Usage("the crossing correction needs delta = 3".into()));
            }
            let opts = ConditionedOptions {
                method,
                max_attempts: args.max_attempts,
                crossing_correction: args.crossing_correction,
            };
            ensemble(args.seed, args.paths, |s| sample_conditioned_bridge(&p, args.eta, &grid, &opts, s))
                .map_err(|e| numerical(e, args.delta, 1.0, args.b + args.eta))?
        }
    };
    let mut meta = Meta::new("sample", args, policy);
    let attempts: usize = paths.iter().filter_map(|p| p.meta.attempts).sum();
    let clamped: usize = paths.iter().map(|p| p.meta.clamped).sum();
    let mut checks = json!({ "paths": paths.len(), "clamped_values": clamped });
    if args.sampler == SamplerChoice::Conditioned {
        checks["attempts"] = json!(attempts);
        checks["acceptance_rate"] = json!(paths.len() as f64 / attempts as f64);
    }
    meta.checks = Some(checks);
    emit(&render_paths(&meta, &paths, args.out.format)?, args.out.output.as_deref())
}

/// Runs the suites; Ok(false) when any of them failed.
pub fn validate(args: &ValidateArgs) -> Result<bool, CliError> {
    if args.suite == "list" {
        let mut text = String::new();
        for s in SUITES {
            text.push_str(&format!("{s:<20} {:>5.0}s\n", time_budget(s).expect("known suite")));
        }
        emit(text.as_bytes(), args.output.as_deref())?;
        return Ok(true);
    }
    let names = resolve_suites(&args.suite).map_err(usage)?;
    let cfg = SuiteConfig {
        seed: args.seed,
        paths: args.paths,
        delta: args.delta,
        policy: policy_of(&args.policy)?,
        timings: args.timings,
    };
    let reports = names.iter().map(|n| run_suite(n, &cfg).map_err(usage)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let text = if args.json {
        let mut s = serde_json::to_string_pretty(&reports).expect("reports serialize");
        s.push('\n');
        s
    } else {
        reports.iter().map(|r| r.table()).collect::<Vec<_>>().join("\n")
    };
    emit(text.as_bytes(), args.output.as_deref())?;
    Ok(passed)
}
