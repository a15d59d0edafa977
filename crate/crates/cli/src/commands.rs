use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use replikit::diagnostics::{convergence_study, equilibrium_distance, residual_study, ConvergenceRow, OracleOptions};
use replikit::models::{tanh5, BuiltinModel, PayoffMatrixModel};
use replikit::{
    integrate_adaptive, integrate_fixed_partial, ControllerConfig, FitnessModel, Scheme, SimplexState, Trajectory,
};

use crate::args::{ConvergeArgs, EquilibriumArgs, Mode, ModelArgs, ResidualArgs, SimulateArgs, SweepArgs};
use crate::csv::{self, num, opt};
use crate::error::CliError;

type Model = Box<dyn FitnessModel>;

struct Setup {
    model: Model,
    x0: SimplexState,
}

fn parse_vector(field: &'static str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(field, format!("`{part}` is not a number")))
        })
        .collect()
}

fn parse_state(field: &'static str, text: &str, dim: usize) -> Result<SimplexState, CliError> {
    let values = parse_vector(field, text)?;
    if values.len() != dim {
        return Err(CliError::config(
            field,
            format!("expected {dim} components for this model, got {}", values.len()),
        ));
    }
    SimplexState::new(values).map_err(|e| CliError::config(field, e))
}

fn load_model(args: &ModelArgs, default: &str) -> Result<(Model, SimplexState), CliError> {
    let name = args.model.as_deref().unwrap_or(default);
    if let Some(path) = name.strip_prefix("payoff:") {
        if args.theta.is_some() {
            return Err(CliError::config("--theta", "only the tanh5 model takes a scale"));
        }
        let model = PayoffMatrixModel::from_file(path).map_err(|e| CliError::config("--model", e))?;
        let x0 = SimplexState::barycenter(model.dim()).map_err(|e| CliError::config("--model", e))?;
        return Ok((Box::new(model), x0));
    }
    let mut builtin = BuiltinModel::from_str(name).map_err(|e| CliError::config("--model", e))?;
    if let Some(theta) = args.theta {
        match builtin {
            BuiltinModel::Tanh5 { .. } => {
                tanh5(theta).map_err(|e| CliError::config("--theta", e))?;
                builtin = BuiltinModel::Tanh5 { theta };
            }
            _ => return Err(CliError::config("--theta", "only the tanh5 model takes a scale")),
        }
    }
    let model = builtin.build().map_err(|e| CliError::config("--model", e))?;
    Ok((model, builtin.default_x0()))
}

fn setup(args: &ModelArgs, default_model: &str) -> Result<Setup, CliError> {
    let (model, default_x0) = load_model(args, default_model)?;
    let x0 = if args.x0 == "default" {
        default_x0
    } else {
        parse_state("--x0", &args.x0, model.dim())?
    };
    Ok(Setup { model, x0 })
}

fn parse_scheme(text: &str, field: &'static str) -> Result<Scheme, CliError> {
    Scheme::from_str(text).map_err(|e| CliError::config(field, e))
}

fn positive(field: &'static str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn write_trajectory(out: &mut dyn Write, traj: &Trajectory) -> std::io::Result<()> {
    let mut header = vec!["t".to_string(), "h".into(), "eps".into(), "accepted".into()];
    header.extend((1..=traj.dim()).map(|i| format!("x{i}")));
    csv::row(out, &header)?;

    let state_row = |t: f64, h: Option<f64>, eps: Option<f64>, accepted: bool, x: &[f64]| {
        let mut fields = vec![num(t), opt(h), opt(eps), u8::from(accepted).to_string()];
        fields.extend(x.iter().map(|v| num(*v)));
        fields
    };
    csv::row(out, &state_row(0.0, None, None, true, &traj.states[0]))?;
    let mut k = 0;
    for a in &traj.attempts {
        if a.accepted {
            k += 1;
            csv::row(out, &state_row(traj.times[k], Some(a.h), a.eps, true, &traj.states[k]))?;
        } else {
            csv::row(out, &state_row(a.t, Some(a.h), a.eps, false, &traj.states[k]))?;
        }
    }
    out.flush()
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let Setup { model, x0 } = setup(&args.model, "rps3")?;
    let scheme = parse_scheme(&args.scheme, "--scheme")?;
    let t_end = positive("--T", args.t_end)?;

    let (traj, failure) = match args.mode {
        Mode::Fixed => {
            let h = positive("--h", args.h.ok_or_else(|| CliError::config("--h", "fixed mode needs a step size"))?)?;
            integrate_fixed_partial(scheme, &x0, h, t_end, &model).map_err(|e| CliError::from_core("--h", e))?
        }
        Mode::Adaptive => {
            if scheme != Scheme::Rational {
                return Err(CliError::config("--scheme", "adaptive mode runs the rational scheme only"));
            }
            let atol = args.atol.or(args.tol).ok_or_else(|| CliError::config("--tol", "adaptive mode needs a tolerance"))?;
            let rtol = args.rtol.or(args.tol).ok_or_else(|| CliError::config("--tol", "adaptive mode needs a tolerance"))?;
            let n = model.dim();
            let mut cfg = ControllerConfig::new(vec![atol; n], vec![rtol; n]).with_classic_pi(args.classic_pi);
            if let Some(h0) = args.h0 {
                cfg = cfg.with_h0(positive("--h0", h0)?);
            }
            cfg.validate(n).map_err(|e| CliError::config("--tol", e))?;
            let traj = integrate_adaptive(&x0, t_end, &model, &cfg).map_err(|e| CliError::from_core("--tol", e))?;
            (traj, None)
        }
    };

    let mut out = csv::open(args.out.as_deref())?;
    write_trajectory(&mut *out, &traj)?;
    match failure {
        Some(err) => Err(CliError::Numerical(err)),
        None => Ok(()),
    }
}

fn dyadic_steps(sweep: &SweepArgs, default_min: i32) -> Result<Vec<f64>, CliError> {
    let hi = sweep.h_max_exp;
    let lo = sweep.h_min_exp.unwrap_or(default_min);
    if lo < hi {
        return Err(CliError::config("--h-min-exp", format!("must be at least --h-max-exp ({hi}), got {lo}")));
    }
    if !(-60..=60).contains(&hi) || !(-60..=60).contains(&lo) {
        return Err(CliError::config("--h-min-exp", "exponents must lie in [-60, 60]"));
    }
    Ok((hi..=lo).map(|k| 2f64.powi(-k)).collect())
}

pub fn converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let Setup { model, x0 } = setup(&args.model, "rps3")?;
    let hs = dyadic_steps(&args.sweep, 10)?;
    let t_end = positive("--T", args.sweep.t_end.unwrap_or(10.0))?;
    let opts = OracleOptions {
        h_ref: 2f64.powi(-args.oracle_exp),
        ..OracleOptions::default()
    };
    let study = |scheme| -> Result<Vec<ConvergenceRow>, CliError> {
        convergence_study(scheme, &model, &x0, t_end, &hs, &opts).map_err(|e| CliError::from_core("--h-max-exp", e))
    };

    let mut out = csv::open(args.sweep.out.as_deref())?;
    if args.scheme == "both" {
        let rational = study(Scheme::Rational)?;
        let auxiliary = study(Scheme::Auxiliary)?;
        csv::row(
            &mut *out,
            &["h", "e2_rational", "p_hat_rational", "e2_auxiliary", "p_hat_auxiliary"].map(String::from),
        )?;
        for (r, a) in rational.iter().zip(&auxiliary) {
            csv::row(&mut *out, &[num(r.h), num(r.e2), opt(r.p_hat), num(a.e2), opt(a.p_hat)])?;
        }
    } else {
        let rows = study(parse_scheme(&args.scheme, "--scheme")?)?;
        csv::row(&mut *out, &["h", "e2", "p_hat"].map(String::from))?;
        for r in rows {
            csv::row(&mut *out, &[num(r.h), num(r.e2), opt(r.p_hat)])?;
        }
    }
    Ok(out.flush()?)
}

pub fn residual(args: &ResidualArgs) -> Result<(), CliError> {
    let Setup { model, x0 } = setup(&args.model, "trig6")?;
    let hs = dyadic_steps(&args.sweep, 12)?;
    let t_end = positive("--T", args.sweep.t_end.unwrap_or(5.0))?;
    let rows = residual_study(&model, &x0, t_end, &hs).map_err(|e| CliError::from_core("--x0", e))?;

    let mut out = csv::open(args.sweep.out.as_deref())?;
    csv::row(&mut *out, &["h", "r_q", "rho"].map(String::from))?;
    for r in rows {
        csv::row(&mut *out, &[num(r.h), num(r.r_q), opt(r.rho)])?;
    }
    Ok(out.flush()?)
}

pub fn equilibrium(args: &EquilibriumArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model, "nonlinear3")?;
    let x_star = match &args.x_star {
        Some(text) => parse_state("--x-star", text, model.dim())?,
        None => model
            .known_equilibria()
            .into_iter()
            .next()
            .ok_or_else(|| CliError::config("--x-star", format!("model `{}` lists no equilibrium", model.name())))?,
    };
    let x0 = if args.model.x0 == "default" {
        x_star.clone()
    } else {
        parse_state("--x0", &args.model.x0, model.dim())?
    };
    let h = positive("--h", args.h)?;
    let t_end = positive("--T", args.t_end)?;
    let schemes = args
        .schemes
        .iter()
        .map(|s| parse_scheme(s, "--schemes"))
        .collect::<Result<Vec<_>, _>>()?;

    let runs = schemes
        .par_iter()
        .map(|&scheme| integrate_fixed_partial(scheme, &x0, h, t_end, &model).map(|run| (scheme, run)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::from_core("--h", e))?;

    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: Some(args.out_dir.clone()),
        source,
    })?;
    let mut fatal = None;
    for (scheme, (traj, failure)) in runs {
        let d = equilibrium_distance(&traj, &x_star).map_err(|e| CliError::config("--x-star", e))?;
        write_distances(&args.out_dir.join(format!("equilibrium_{scheme}.csv")), &traj.times, &d)?;
        if let Some(err) = failure {
            if scheme.is_structure_preserving() {
                fatal.get_or_insert(err);
            } else {
                eprintln!("warning: {scheme} stopped before the final time: {err}");
            }
        }
    }
    match fatal {
        Some(err) => Err(CliError::Numerical(err)),
        None => Ok(()),
    }
}

fn write_distances(path: &Path, times: &[f64], d: &[f64]) -> Result<(), CliError> {
    let mut out = csv::open(Some(path))?;
    csv::row(&mut *out, &["t", "d_star"].map(String::from))?;
    for (t, v) in times.iter().zip(d) {
        csv::row(&mut *out, &[num(*t), num(*v)])?;
    }
    Ok(out.flush()?)
}
