//! `ivpsuite`: list problems, run integrations, compute Lyapunov spectra and
//! convergence orders, and write gnuplot scripts.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => commands::list(),
        Command::Run(a) => commands::run(&a),
        Command::Lyapunov(a) => commands::lyapunov(&a),
        Command::Convergence(a) => commands::convergence(&a),
        Command::Plotscript(a) => commands::plotscript(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}
