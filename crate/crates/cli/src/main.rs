mod commands;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use bohmlab_core::Error;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::commands::Outcome;
use crate::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "bohmlab", version, about = "Nodes, X-points and Bohmian trajectories of oscillator superpositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "BOHMLAB_THREADS")]
    threads: Option<usize>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Track every node over the time window.
    Nodes,
    /// X-points and their asymptotic curves at one time.
    Xpoints,
    /// Integrate trajectories from the listed initial conditions.
    Traj,
    /// Sample Ψ, velocity and potentials on the region.
    Field,
    /// Stretching numbers for an ensemble of initial conditions.
    Chaos,
    /// Closed-form checks for the equal-weight Ψ₀₀ + Ψ₁₀ + Ψ₁₁ state.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Nodes => "nodes",
            Command::Xpoints => "xpoints",
            Command::Traj => "traj",
            Command::Field => "field",
            Command::Chaos => "chaos",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    scenario: &'a str,
    bohmlab_version: &'a str,
    threads: usize,
    seed: u64,
    wall_time_s: f64,
    status: &'a str,
    error: Option<String>,
    files: Vec<String>,
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

fn is_numerical(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(
            Error::NodeSingularity { .. }
                | Error::DegenerateTime { .. }
                | Error::LostNode { .. }
                | Error::StepFailure { .. }
                | Error::NoXPointFound { .. }
                | Error::DegenerateState(_)
        )
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let scenario_path = cli.scenario.as_deref().context("--scenario is required").map_err(Failure::Config)?;
    let out = cli.out.as_deref().context("--out is required").map_err(Failure::Config)?;
    let sc = Scenario::load(scenario_path).map_err(Failure::Config)?.resolved(cli.seed);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).map_err(Failure::Config)?;
    write_json(&out.join("resolved_config.json"), &sc).map_err(Failure::Config)?;

    let started = Instant::now();
    let result = match cli.command {
        Command::Nodes => commands::nodes(&sc, out),
        Command::Xpoints => commands::xpoints(&sc, out),
        Command::Traj => commands::traj(&sc, out),
        Command::Field => commands::field(&sc, out),
        Command::Chaos => commands::chaos(&sc, out),
        Command::Oracle => commands::oracle(&sc, out),
    };
    let (files, error, failure) = match result {
        Ok(Outcome { files, failure: None }) => (files, None, None),
        Ok(Outcome { files, failure: Some(e) }) => {
            let e = anyhow::Error::from(e);
            (files, Some(format!("{e:#}")), Some(Failure::Numerical(e)))
        }
        Err(e) if is_numerical(&e) => (Vec::new(), Some(format!("{e:#}")), Some(Failure::Numerical(e))),
        Err(e) => (Vec::new(), Some(format!("{e:#}")), Some(Failure::Config(e))),
    };
    let status = match &failure {
        None => "ok",
        Some(Failure::Numerical(_)) => "numerical_failure",
        Some(Failure::Config(_)) => "config_error",
    };
    let manifest = Manifest {
        command: cli.command.name(),
        scenario: &sc.name,
        bohmlab_version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        seed: sc.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
        error,
        files,
    };
    write_json(&out.join("manifest.json"), &manifest).map_err(Failure::Config)?;
    match failure {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
