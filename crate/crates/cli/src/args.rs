use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ivpsuite::integrators::{FixedMethod, ImplicitMethod};
use ivpsuite::{ParamValue, Parameters};

#[derive(Parser, Debug)]
#[command(name = "ivpsuite", version, about = "Initial value test problems and reference integrators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List problem families and their presets.
    List,
    /// Integrate a preset and write the trajectory.
    Run(RunArgs),
    /// Lyapunov spectrum and Kaplan–Yorke dimension of a preset.
    Lyapunov(LyapunovArgs),
    /// Observed order of a fixed-step method on a problem with an exact solution.
    Convergence(ConvergenceArgs),
    /// Gnuplot script for a trajectory CSV file.
    Plotscript(PlotArgs),
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    /// Problem family, e.g. lorenz63.
    pub family: String,
    /// Preset name (default Canonical).
    #[arg(long = "preset", value_name = "NAME")]
    pub preset_flag: Option<String>,
    /// Parameter override NAME=VALUE; vectors as [a,b,...], matrices as [[..],[..]].
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Time span T0:TF.
    #[arg(long, value_name = "T0:TF")]
    pub tspan: Option<String>,
    /// Value of the family's `seed` parameter.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Preset name, as an alternative to --preset.
    pub preset: Option<String>,
    /// adaptive, fixed:N[:rk4|:euler], implicit[:sdirk4|:trbdf2] or events.
    #[arg(long, default_value = "adaptive")]
    pub integrator: String,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Trapezoidal,
    Variational,
}

#[derive(Args, Debug)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Preset name, as an alternative to --preset.
    pub preset: Option<String>,
    /// Length of the averaging span.
    #[arg(default_value_t = 500.0)]
    pub span: f64,
    /// Tolerance of the averaging run (default 100 eps).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "trapezoidal")]
    pub scheme: SchemeArg,
    /// Output points per accepted step (trapezoidal scheme).
    #[arg(long, default_value_t = 4)]
    pub refine: usize,
    /// Re-orthonormalization interval (variational scheme).
    #[arg(long, default_value_t = 0.1)]
    pub interval: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// rk4 or euler.
    pub method: String,
    /// Comma-separated step counts in geometric progression, e.g. 16,32,64,128.
    pub ladder: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Trajectory CSV written by `run --format csv`.
    pub trajectory: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Integrator selected by `--integrator`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntegratorChoice {
    Adaptive,
    Fixed(usize, FixedMethod),
    Implicit(ImplicitMethod),
    Events,
}

impl IntegratorChoice {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["adaptive"] => Ok(Self::Adaptive),
            ["events"] => Ok(Self::Events),
            ["implicit"] => Ok(Self::Implicit(ImplicitMethod::Sdirk4)),
            ["implicit", m] => ImplicitMethod::parse(m)
                .map(Self::Implicit)
                .ok_or_else(|| anyhow!("unknown implicit method '{m}' (expected one of {:?})", ImplicitMethod::NAMES)),
            ["fixed", n, rest @ ..] if rest.len() <= 1 => {
                let steps: usize = n.parse().map_err(|_| anyhow!("invalid step count '{n}' in '{s}'"))?;
                if steps == 0 {
                    bail!("fixed-step integration needs at least one step");
                }
                let method = match rest.first() {
                    None => FixedMethod::Rk4,
                    Some(m) => FixedMethod::parse(m).ok_or_else(|| anyhow!("unknown fixed-step method '{m}'"))?,
                };
                Ok(Self::Fixed(steps, method))
            }
            _ => bail!("unknown integrator '{s}' (expected adaptive, fixed:N[:rk4|:euler], implicit[:sdirk4|:trbdf2] or events)"),
        }
    }
}

impl ProblemArgs {
    /// Preset from `--preset` or the positional argument, default Canonical.
    pub fn preset_name(&self, positional: Option<&str>) -> Result<String> {
        match (self.preset_flag.as_deref(), positional) {
            (Some(a), Some(b)) if a != b => bail!("preset given twice: '{a}' and '{b}'"),
            (Some(a), _) => Ok(a.to_string()),
            (None, Some(b)) => Ok(b.to_string()),
            (None, None) => Ok("Canonical".to_string()),
        }
    }

    pub fn overrides(&self) -> Result<Parameters> {
        let mut params = Parameters::new();
        for item in &self.set {
            let (name, value) = item.split_once('=').ok_or_else(|| anyhow!("override '{item}' is not NAME=VALUE"))?;
            let name = name.trim();
            if name.is_empty() {
                bail!("override '{item}' has an empty name");
            }
            let value = ParamValue::parse(value).map_err(|e| anyhow!("override {name}: {e}"))?;
            params.insert(name, value);
        }
        if let Some(seed) = self.seed {
            params.insert("seed", ParamValue::Scalar(seed as f64));
        }
        Ok(params)
    }

    pub fn time_span(&self) -> Result<Option<(f64, f64)>> {
        let Some(text) = &self.tspan else { return Ok(None) };
        let (a, b) = text.split_once(':').ok_or_else(|| anyhow!("time span '{text}' is not T0:TF"))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("invalid time '{s}' in span '{text}'"));
        Ok(Some((parse(a)?, parse(b)?)))
    }
}

pub fn parse_ladder(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| anyhow!("invalid step count '{s}' in ladder '{text}'")))
        .collect()
}
