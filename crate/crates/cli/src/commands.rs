use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use serde_json::json;

use ivpsuite::analysis::{convergence_order, lyapunov_spectrum, LyapunovOptions, LyapunovScheme};
use ivpsuite::export::{plot_script, read_csv, write_csv, write_json, TrajectoryFile};
use ivpsuite::integrators::{
    integrate_adaptive, integrate_fixed, integrate_implicit, integrate_with_events, FixedMethod, IntegratorOptions,
    Status,
};
use ivpsuite::{build_preset, families, Problem};

use crate::args::{ConvergenceArgs, Format, IntegratorChoice, LyapunovArgs, PlotArgs, ProblemArgs, RunArgs, SchemeArg};

fn build(args: &ProblemArgs, positional: Option<&str>) -> Result<Problem> {
    let preset = args.preset_name(positional)?;
    let overrides = args.overrides()?;
    let mut problem = build_preset(&args.family, &preset, &overrides)?;
    if let Some((t0, tf)) = args.time_span()? {
        problem.set_time_span(t0, tf)?;
    }
    Ok(problem)
}

/// Writes to `path`, or standard output when none is given. The file is
/// only created once `body` is ready to be written.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            body(&mut w).with_context(|| format!("cannot write {}", p.display()))?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

pub fn list() -> Result<ExitCode> {
    let mut out = io::stdout().lock();
    for family in families() {
        writeln!(out, "{:<14} {:<36} {:<14} {}", family.name, family.title, family.size_label, family.description)?;
        for preset in family.presets {
            writeln!(out, "    {:<14} {}", preset.name, preset.description)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run(args: &RunArgs) -> Result<ExitCode> {
    let choice = IntegratorChoice::parse(&args.integrator)?;
    let problem = build(&args.problem, args.preset.as_deref())?;
    let mut opts = IntegratorOptions::default();
    if let Some(a) = args.abs_tol {
        opts.abs_tol = a;
    }
    if let Some(r) = args.rel_tol {
        opts.rel_tol = r;
    }
    opts.validate()?;
    let traj = match choice {
        IntegratorChoice::Adaptive => integrate_adaptive(&problem, &opts)?,
        IntegratorChoice::Fixed(n, m) => integrate_fixed(&problem, n, m)?,
        IntegratorChoice::Implicit(m) => integrate_implicit(&problem, &IntegratorOptions { implicit_method: m, ..opts })?,
        IntegratorChoice::Events => integrate_with_events(&problem, &opts)?,
    };
    match args.format {
        Format::Csv => emit(args.out.as_deref(), |w| write_csv(&traj, w))?,
        Format::Json => {
            let file = TrajectoryFile::new(&problem, &traj);
            emit(args.out.as_deref(), |w| {
                write_json(&file, &mut *w)?;
                writeln!(w)
            })?
        }
    }
    Ok(match traj.status {
        Status::Complete => ExitCode::SUCCESS,
        Status::TerminatedByEvent => ExitCode::from(2),
        Status::Failed => ExitCode::from(1),
    })
}

pub fn lyapunov(args: &LyapunovArgs) -> Result<ExitCode> {
    let problem = build(&args.problem, args.preset.as_deref())?;
    let scheme = match args.scheme {
        SchemeArg::Trapezoidal => LyapunovScheme::Trapezoidal { refine: args.refine },
        SchemeArg::Variational => LyapunovScheme::Variational { interval: args.interval },
    };
    let mut opts = LyapunovOptions { averaging_length: args.span, scheme, ..LyapunovOptions::default() };
    if let Some(tol) = args.tol {
        opts.tolerance = tol;
    }
    let r = lyapunov_spectrum(&problem, &opts)?;
    let report = json!({
        "problem": problem.name(),
        "preset": problem.preset(),
        "parameters": problem.parameters().to_json(),
        "spinup_span": problem.time_span(),
        "averaging_span": r.averaging_span,
        "scheme": format!("{:?}", args.scheme).to_lowercase(),
        "tolerance": opts.tolerance,
        "steps": r.steps,
        "exponents": r.exponents,
        "fractal_dimension": r.fractal_dimension,
    });
    emit_json(args.out.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

pub fn convergence(args: &ConvergenceArgs) -> Result<ExitCode> {
    let method = FixedMethod::parse(&args.method).ok_or_else(|| anyhow!("unknown method '{}' (expected rk4 or euler)", args.method))?;
    let ladder = crate::args::parse_ladder(&args.ladder)?;
    let problem = build(&args.problem, None)?;
    let r = convergence_order(&problem, method, &ladder)?;
    let report = json!({
        "problem": problem.name(),
        "preset": problem.preset(),
        "method": method.name(),
        "steps": r.steps,
        "step_sizes": r.step_sizes,
        "errors": r.errors,
        "order": r.order,
    });
    emit_json(args.out.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

pub fn plotscript(args: &PlotArgs) -> Result<ExitCode> {
    let path = &args.trajectory;
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (_, states) = read_csv(BufReader::new(file)).with_context(|| format!("cannot read {}", path.display()))?;
    let num_vars = states.first().map_or(0, Vec::len);
    let title = args.title.clone().unwrap_or_else(|| path.display().to_string());
    let script = plot_script(&path.display().to_string(), num_vars, &title);
    emit(args.out.as_deref(), |w| w.write_all(script.as_bytes()))?;
    Ok(ExitCode::SUCCESS)
}
