mod cli;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use log::LevelFilter;

use cli::{Cli, Command};
use loopinv::pipeline::{solve_source, Status};
use loopinv::verify::check_invariant;
use loopinv::{parse_invariant, parse_problem};

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(3)
    })
}

fn solve(path: &Path, opts: &cli::SolveOpts) -> Result<ExitCode, ExitCode> {
    let cfg = opts.config().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(3)
    })?;
    let src = read(path)?;
    let result = solve_source(&src, &cfg);
    for line in result.diagnostics() {
        eprintln!("{line}");
    }
    println!("{}", result.answer());
    Ok(ExitCode::from(result.status.exit_code() as u8))
}

fn check(path: &Path, inv_path: &Path, solver: Option<&Path>, timeout_ms: u64) -> Result<ExitCode, ExitCode> {
    let input_error = |e: loopinv::ParseError| {
        eprintln!("error: {e}");
        ExitCode::from(3)
    };
    let problem = parse_problem(&read(path)?).map_err(input_error)?;
    let inv = parse_invariant(&problem, &read(inv_path)?).map_err(input_error)?;
    let solver = solver.map(Path::to_path_buf).unwrap_or_else(loopinv::config::default_solver_path);
    let report = check_invariant(&problem, &inv, &solver, Duration::from_millis(timeout_ms), 0).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(Status::Unknown.exit_code() as u8)
    })?;
    println!("{report}");
    Ok(if report.overall {
        ExitCode::SUCCESS
    } else if report.has_unknown() {
        ExitCode::from(Status::Unknown.exit_code() as u8)
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { LevelFilter::Debug } else { LevelFilter::Warn };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .init();
    let res = match &cli.command {
        Command::Solve { path, opts } => solve(path, opts),
        Command::Check {
            path,
            invariant,
            solver_path,
            query_timeout,
        } => check(path, invariant, solver_path.as_deref(), *query_timeout),
    };
    res.unwrap_or_else(|code| code)
}
