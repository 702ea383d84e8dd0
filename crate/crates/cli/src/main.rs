//! `leggett`: evaluate, scan and simulate the basic Leggett inequalities.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 a bound violation above
//! tolerance was found, 1 any other failure.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "LEGGETT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "leggett", version, about = "Basic Leggett inequalities versus two-photon quantum predictions")]
struct Cli {
    /// Worker threads for scans and sampling (results do not depend on it).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probabilities, correlation triple, bounds and S at one point.
    Eval(commands::EvalArgs),
    /// Grid scan (plus optional refinement) for the supremum of S.
    Scan(commands::ScanArgs),
    /// Monte Carlo outcome records and estimated correlation triple.
    Mc(commands::McArgs),
    /// Property run of the bounds over random hidden-variable models.
    Hv(commands::HvArgs),
    /// Exact S against its first-order expansion along α = √ε, β = π/2 − √ε.
    Expand(commands::ExpandArgs),
}

/// Angle unit switch shared by commands taking angles.
#[derive(Debug, Clone, Copy, Args)]
pub struct AngleUnit {
    /// Interpret angle flags as degrees (reports are always in radians).
    #[arg(long)]
    degrees: bool,
}

impl AngleUnit {
    pub fn to_radians(self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }
}

/// Outcome of a command, mapped onto the process exit code.
pub enum Outcome {
    Ok,
    Violation,
}

/// Errors caused by bad user input (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl From<leggett_core::Error> for UsageError {
    fn from(e: leggett_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Scan(a) => commands::scan(a),
        Command::Mc(a) => commands::mc(a),
        Command::Hv(a) => commands::hv(a),
        Command::Expand(a) => commands::expand(a),
    };
    let (envelope, outcome) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<UsageError>().is_some() { 2 } else { 1 };
            return ExitCode::from(code);
        }
    };
    let text = match envelope.render() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    match outcome {
        Outcome::Ok => ExitCode::SUCCESS,
        Outcome::Violation => ExitCode::from(3),
    }
}
