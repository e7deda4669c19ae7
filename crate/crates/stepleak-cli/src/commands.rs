//! Implementations of the five subcommands. Each returns `Ok(())` on
//! success or a `CliError` whose kind fixes the process exit code.

use stepleak::bound::{hcr_bound, unit_convert, BiasFunction};
use stepleak::lti::zoh_discretize;
use stepleak::monte_carlo::run_trials;
use stepleak::{
    AmplitudeMode, DiscreteLtiSystem, EstimatorOptions, MeasurementSeries, StepScenario,
};

use crate::config::{resolve, Resolved};
use crate::io::{read_measurements, write_report};
use crate::{BoundArgs, CliError, EstimateArgs, MonteCarloArgs, SimulateArgs, SweepArgs};

fn parse_mode(mode: &str) -> Result<AmplitudeMode, CliError> {
    if mode == "ls" {
        return Ok(AmplitudeMode::LeastSquares);
    }
    if let Some(value) = mode.strip_prefix("fixed:") {
        let amplitude: f64 = value.parse().map_err(|_| {
            CliError::Config(format!(
                "--mode fixed:VALUE needs a number, found `{value}`"
            ))
        })?;
        if !amplitude.is_finite() {
            return Err(CliError::Config(format!(
                "--mode fixed:VALUE needs a finite number, found `{value}`"
            )));
        }
        return Ok(AmplitudeMode::Fixed(amplitude));
    }
    Err(CliError::Config(format!(
        "--mode must be `ls` or `fixed:VALUE`, found `{mode}`"
    )))
}

pub fn bound(args: &BoundArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.model.model, &args.model.overrides())?;
    let k_star = resolved.require_k_star()?;
    let horizon = resolved.require_horizon()?;
    let sys = &resolved.system;
    let report = hcr_bound(sys, k_star, horizon, &BiasFunction::Zero)?;

    let dt = sys.dt();
    println!(
        "model: {} (n = {}, dt = {} min)",
        resolved.model_path,
        sys.dim(),
        dt
    );
    println!("change time k*: {k_star} (t* = {} min)", k_star as f64 * dt);
    println!(
        "horizon N: {horizon} samples (T = {} min)",
        horizon as f64 * dt
    );
    if report.tau_star == 0 {
        println!("tau*: none (no admissible shift separates the hypotheses)");
    } else {
        let s_star = report.s_profile[report.tau_star - 1].1;
        println!("tau*: {}", report.tau_star);
        println!("S(tau*): {s_star}");
    }
    if report.overflow_mode {
        println!("evaluation: log-domain (large shift information)");
    }
    println!("bound: {} steps^2", report.bound_steps2);
    println!("bound: {} min^2", report.bound_phys);

    if args.out.is_some() {
        let record = resolved.record("bound");
        let rows: Vec<String> = report
            .s_profile
            .iter()
            .map(|(tau, s)| format!("{tau},{s}"))
            .collect();
        write_report(
            args.out.as_deref(),
            &record.to_comment_line(),
            "tau,s",
            &rows,
        )?;
        println!(
            "wrote shift-information profile to {}",
            args.out.as_deref().unwrap()
        );
    }
    Ok(())
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.model.model, &args.model.overrides())?;
    let sys = &resolved.system;
    let values = read_measurements(&args.data)?;
    if let Some(horizon) = resolved.horizon {
        if values.len() != horizon + 1 {
            return Err(CliError::Config(format!(
                "measurement CSV {} has {} samples, expected N + 1 = {} for horizon N = {horizon}",
                args.data,
                values.len(),
                horizon + 1
            )));
        }
    } else if values.len() < 2 {
        return Err(CliError::Config(format!(
            "measurement CSV {} has {} sample(s); at least 2 are required",
            args.data,
            values.len()
        )));
    }

    let options = EstimatorOptions {
        mode: parse_mode(&args.mode)?,
        candidates: None,
        include_null: args.include_null,
        clamp_unit: args.clamp_unit,
    };
    let series = MeasurementSeries::from_values(values, false)?;
    let result =
        stepleak::estimator::estimate_change(&series, sys, resolved.x0.as_ref(), &options)?;

    let dt = sys.dt();
    println!(
        "k_hat: {} (t_hat = {} min)",
        result.k_hat,
        result.k_hat as f64 * dt
    );
    println!("u_hat: {}", result.u_hat);
    println!("residual at k_hat: {}", result.best_fit().residual);
    println!(
        "candidates: {} evaluated, {} excluded",
        result.residuals.len(),
        result.excluded.len()
    );
    if let Some(null_residual) = result.null_residual {
        println!("null residual (no change): {null_residual}");
        println!("no-change preferred: {}", result.no_change_preferred());
    }

    if args.out.is_some() {
        let mut record = resolved.record("estimate");
        record.mode = Some(args.mode.clone());
        record.data = Some(&args.data);
        record.horizon = Some(series.horizon());
        let rows: Vec<String> = result
            .residuals
            .iter()
            .map(|fit| format!("{},{},{}", fit.kappa, fit.u_hat, fit.residual))
            .collect();
        write_report(
            args.out.as_deref(),
            &record.to_comment_line(),
            "kappa,u_hat,residual",
            &rows,
        )?;
        println!("wrote residual table to {}", args.out.as_deref().unwrap());
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.model.model, &args.model.overrides())?;
    let scenario = resolved.scenario()?;
    let sys = &resolved.system;
    let series = if args.noisy {
        sys.simulate_noisy(&scenario, args.seed)?
    } else {
        sys.simulate_noiseless(&scenario)?
    };

    let mut record = resolved.record("simulate");
    record.noisy = Some(args.noisy);
    if args.noisy {
        record.seed = Some(args.seed);
    }
    let rows: Vec<String> = series
        .values()
        .iter()
        .enumerate()
        .map(|(k, y)| format!("{k},{y}"))
        .collect();
    write_report(args.out.as_deref(), &record.to_comment_line(), "k,y", &rows)?;
    if let Some(path) = &args.out {
        println!("wrote {} samples to {path}", series.len());
    }
    Ok(())
}

pub fn montecarlo(args: &MonteCarloArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.model.model, &args.model.overrides())?;
    let scenario = resolved.scenario()?;
    let sys = &resolved.system;
    let options = EstimatorOptions {
        mode: parse_mode(&args.mode)?,
        ..Default::default()
    };
    let summary = run_trials(sys, &scenario, args.trials, args.seed, &options)?;
    let report = hcr_bound(
        sys,
        scenario.k_star(),
        scenario.horizon(),
        &BiasFunction::Zero,
    )?;

    let dt = sys.dt();
    let v = summary.empirical_variance;
    println!(
        "trials: {} (kept {}, excluded {})",
        summary.n_trials,
        summary.kept_trials(),
        summary.excluded_trials
    );
    println!("master seed: {}", summary.master_seed);
    println!(
        "empirical variance: {v} steps^2 = {} min^2",
        unit_convert(v, dt)?
    );
    println!(
        "empirical bias: {} steps = {} min",
        summary.empirical_bias,
        summary.empirical_bias * dt
    );
    println!(
        "bound: {} steps^2 = {} min^2",
        report.bound_steps2, report.bound_phys
    );

    if args.out.is_some() {
        let mut record = resolved.record("montecarlo");
        record.seed = Some(args.seed);
        record.trials = Some(args.trials);
        record.mode = Some(args.mode.clone());
        let rows: Vec<String> = summary
            .histogram
            .iter()
            .map(|(k_hat, count)| format!("{k_hat},{count}"))
            .collect();
        write_report(
            args.out.as_deref(),
            &record.to_comment_line(),
            "k_hat,count",
            &rows,
        )?;
        println!("wrote histogram to {}", args.out.as_deref().unwrap());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepParam {
    Sigma2,
    A,
    Dt,
    Horizon,
}

impl SweepParam {
    fn column(self) -> &'static str {
        match self {
            SweepParam::Sigma2 => "sigma2",
            SweepParam::A => "a",
            SweepParam::Dt => "dt",
            SweepParam::Horizon => "N",
        }
    }
}

fn parse_sweep(spec: &str) -> Result<(SweepParam, Vec<f64>), CliError> {
    let bad_spec = || {
        CliError::Config(format!(
            "sweep spec `{spec}` must be param:start:stop:steps or param:v1,v2,... \
             with param one of sigma2 | a | dt | N"
        ))
    };
    let (name, rest) = spec.split_once(':').ok_or_else(bad_spec)?;
    let param = match name {
        "sigma2" => SweepParam::Sigma2,
        "a" => SweepParam::A,
        "dt" => SweepParam::Dt,
        "N" | "n" => SweepParam::Horizon,
        _ => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter `{name}` (use sigma2 | a | dt | N)"
            )))
        }
    };
    let parse_value = |token: &str| -> Result<f64, CliError> {
        let value: f64 = token.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "sweep spec `{spec}`: non-numeric value `{}`",
                token.trim()
            ))
        })?;
        if !value.is_finite() {
            return Err(CliError::Config(format!(
                "sweep spec `{spec}`: non-finite value `{}`",
                token.trim()
            )));
        }
        Ok(value)
    };

    let values: Vec<f64> = if rest.contains(',') {
        rest.split(',').map(parse_value).collect::<Result<_, _>>()?
    } else if rest.contains(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad_spec());
        }
        let start = parse_value(parts[0])?;
        let stop = parse_value(parts[1])?;
        let steps: usize = parts[2].trim().parse().map_err(|_| {
            CliError::Config(format!(
                "sweep spec `{spec}`: step count must be a positive integer, found `{}`",
                parts[2].trim()
            ))
        })?;
        match steps {
            0 => {
                return Err(CliError::Config(format!(
                    "sweep spec `{spec}`: step count is 0"
                )))
            }
            1 => {
                if start != stop {
                    return Err(CliError::Config(format!(
                        "sweep spec `{spec}`: a single-step range needs start = stop"
                    )));
                }
                vec![start]
            }
            _ => (0..steps)
                .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    } else {
        vec![parse_value(rest)?]
    };
    if values.is_empty() {
        return Err(CliError::Config(format!("sweep spec `{spec}`: empty grid")));
    }
    Ok((param, values))
}

/// One resolved grid point: the system to evaluate plus its (possibly
/// rescaled) scenario indices.
struct SweepPoint {
    system: DiscreteLtiSystem,
    k_star: usize,
    horizon: usize,
}

fn sweep_point(resolved: &Resolved, param: SweepParam, value: f64) -> Result<SweepPoint, CliError> {
    let sys = &resolved.system;
    let k_star = resolved.require_k_star()?;
    let horizon = resolved.require_horizon()?;
    match param {
        SweepParam::Sigma2 => Ok(SweepPoint {
            system: sys.with_sigma2(value)?,
            k_star,
            horizon,
        }),
        SweepParam::A => {
            if !sys.is_scalar() {
                return Err(CliError::Config(format!(
                    "sweeping `a` requires a one-state model (this model has n = {})",
                    sys.dim()
                )));
            }
            let system =
                DiscreteLtiSystem::scalar(value, sys.b()[0], sys.c()[0], sys.sigma2(), sys.dt())?;
            Ok(SweepPoint {
                system,
                k_star,
                horizon,
            })
        }
        SweepParam::Dt => {
            if !sys.is_scalar() {
                return Err(CliError::Config(format!(
                    "sweeping `dt` requires a one-state model (this model has n = {})",
                    sys.dim()
                )));
            }
            let a0 = sys.a()[(0, 0)];
            let b0 = sys.b()[0];
            let dt0 = sys.dt();
            if a0 <= 0.0 {
                return Err(CliError::Config(format!(
                    "sweeping `dt` requires 0 < a for the continuous-time inversion \
                     (model has a = {a0})"
                )));
            }
            if value <= 0.0 || !value.is_finite() {
                return Err(CliError::Config(format!(
                    "dt grid value {value} is not a positive sampling interval"
                )));
            }
            // Invert the zero-order hold at the model's own (a, b, dt), then
            // re-discretize at the grid dt. The wall-clock window T = N*dt
            // and change instant t* = k**dt are held fixed.
            let (f, h) = if a0 == 1.0 {
                (0.0, b0 / dt0)
            } else {
                let f = -a0.ln() / dt0;
                (f, b0 * f / (1.0 - a0))
            };
            let window = horizon as f64 * dt0;
            let change_instant = k_star as f64 * dt0;
            let new_horizon = (window / value).round();
            let new_k_star = (change_instant / value).round();
            if new_horizon < 1.0 || new_horizon > 1e9 {
                return Err(CliError::Config(format!(
                    "dt = {value} rescales the horizon to {new_horizon} samples, \
                     outside the supported range"
                )));
            }
            let system = zoh_discretize(f, h, sys.c()[0], value)?.with_sigma2(sys.sigma2())?;
            Ok(SweepPoint {
                system,
                k_star: new_k_star as usize,
                horizon: new_horizon as usize,
            })
        }
        SweepParam::Horizon => {
            if value < 1.0 || (value - value.round()).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "N grid value {value} is not a positive integer"
                )));
            }
            Ok(SweepPoint {
                system: sys.clone(),
                k_star,
                horizon: value.round() as usize,
            })
        }
    }
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.model.model, &args.model.overrides())?;
    let (param, values) = parse_sweep(&args.sweep)?;

    let mut columns = format!("{},k_star,horizon,bound_steps2,bound_min2", param.column());
    if args.trials.is_some() {
        columns.push_str(",vhat_steps2,vhat_min2");
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let point = sweep_point(&resolved, param, value)?;
        let report = hcr_bound(
            &point.system,
            point.k_star,
            point.horizon,
            &BiasFunction::Zero,
        )?;
        let mut row = format!(
            "{value},{},{},{},{}",
            point.k_star, point.horizon, report.bound_steps2, report.bound_phys
        );
        if let Some(trials) = args.trials {
            let mut scenario = StepScenario::new(point.k_star, point.horizon)?
                .with_amplitude(resolved.amplitude)?;
            if let Some(x0) = &resolved.x0 {
                scenario = scenario.with_x0(x0.clone())?;
            }
            let options = EstimatorOptions::default();
            let summary = run_trials(&point.system, &scenario, trials, args.seed, &options)?;
            let v = summary.empirical_variance;
            row.push_str(&format!(",{v},{}", unit_convert(v, point.system.dt())?));
        }
        rows.push(row);
    }

    let mut record = resolved.record("sweep");
    record.sweep = Some(&args.sweep);
    record.trials = args.trials;
    if args.trials.is_some() {
        record.seed = Some(args.seed);
    }
    write_report(
        args.out.as_deref(),
        &record.to_comment_line(),
        &columns,
        &rows,
    )?;
    if let Some(path) = &args.out {
        println!("wrote {} sweep rows to {path}", rows.len());
    }
    Ok(())
}
