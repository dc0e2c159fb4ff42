//! `sdbbm`: batch runner for the solvers, limit-law evaluations and
//! simulations in `sdbbm-core`.
//!
//! Exit status: 0 on success, 1 on invalid input or a failed computation,
//! 2 when `verify-ergodic` completes but an acceptance verdict fails.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sdbbm_core::sim::DEFAULT_SEED;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "sdbbm", version, about = "Occupation-time limits of branching Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true, conflicts_with = "json")]
    config: Option<PathBuf>,
    /// Inline JSON configuration.
    #[arg(long, global = true)]
    json: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for simulations. Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads: a positive number or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    threads: Threads,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Λ on [0, 1] for a Laplace spec; CSV `s,lambda`.
    SolveLambda,
    /// Single-mass solution on [0, S]; CSV `s,lambda`.
    LambdaExtended,
    /// Limit log-Laplace value and cumulants; JSON.
    LogLaplace,
    /// Complete-monotonicity probe and Lévy moments; JSON.
    LevyProbe,
    /// Degenerate-regime curve; CSV `K,value`.
    DegenerateCurve,
    /// The Q function; CSV `x,q`.
    QFunction,
    /// Replicates of the particle system; CSV, one row per replicate.
    Simulate,
    /// Simulation against the limit along a T ladder; JSON report plus CSV.
    VerifyErgodic,
    /// Solver grid-refinement study; JSON.
    ConvergenceStudy,
}

#[derive(Clone, Copy, Debug)]
enum Threads {
    Auto,
    Count(usize),
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        }
    }
}

/// Seed precedence: `--seed`, then the configuration, then `SDBBM_SEED`,
/// then [`DEFAULT_SEED`].
fn fallback_seed(env: Option<&str>) -> Result<u64> {
    match env {
        Some(v) => v.trim().parse().with_context(|| format!("SDBBM_SEED is not a u64: `{v}`")),
        None => Ok(DEFAULT_SEED),
    }
}

fn apply_seed(target: &mut Value, flag: Option<u64>, env: Option<&str>) -> Result<()> {
    let Value::Object(map) = target else {
        bail!("configuration must be a JSON object");
    };
    match flag {
        Some(seed) => {
            map.insert("seed".into(), seed.into());
        }
        None if !map.contains_key("seed") => {
            map.insert("seed".into(), fallback_seed(env)?.into());
        }
        None => {}
    }
    Ok(())
}

fn read_config(cli: &Cli) -> Result<Value> {
    let (text, origin) = match (&cli.config, &cli.json) {
        (Some(path), _) => (
            std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?,
            path.display().to_string(),
        ),
        (None, Some(inline)) => (inline.clone(), "--json".to_string()),
        (None, None) => bail!("a configuration is required: pass --config <path> or --json <text>"),
    };
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {origin}"))
}

/// Runs the subcommand without writing anything. `env_seed` is the value of
/// `SDBBM_SEED`, if set.
fn run(cli: &Cli, env_seed: Option<&str>) -> Result<commands::Outcome> {
    let mut input = read_config(cli)?;
    match cli.command {
        Command::Simulate => apply_seed(&mut input, cli.seed, env_seed)?,
        Command::VerifyErgodic => {
            let base = input
                .get_mut("base")
                .context("invalid verify-ergodic configuration: missing field `base`")?;
            apply_seed(base, cli.seed, env_seed)?;
        }
        _ => {}
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::SolveLambda => commands::solve_lambda_cmd(input, out),
        Command::LambdaExtended => commands::lambda_extended_cmd(input, out),
        Command::LogLaplace => commands::log_laplace_cmd(input, out),
        Command::LevyProbe => commands::levy_probe_cmd(input, out),
        Command::DegenerateCurve => commands::degenerate_curve_cmd(input, out),
        Command::QFunction => commands::q_function_cmd(input, out),
        Command::Simulate => commands::simulate_cmd(input, out),
        Command::VerifyErgodic => commands::verify_ergodic_cmd(input, out),
        Command::ConvergenceStudy => commands::convergence_study_cmd(input, out),
    }
}

/// Writes the outcome's files and returns the exit status.
fn finish(result: Result<commands::Outcome>) -> ExitCode {
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    for (path, bytes) in &outcome.files {
        if let Err(e) = output::emit(path.as_deref(), bytes) {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }
    let written: Vec<String> = outcome
        .files
        .iter()
        .filter_map(|(p, _)| p.as_deref().map(Path::display).map(|d| d.to_string()))
        .collect();
    if written.is_empty() {
        eprintln!("{}", outcome.summary);
    } else {
        println!("{} -> {}", outcome.summary, written.join(", "));
    }
    if outcome.gate_failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Threads::Count(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    if let Err(e) = pool.build_global() {
        eprintln!("error: cannot start worker threads: {e}");
        return ExitCode::from(1);
    }
    let env_seed = std::env::var("SDBBM_SEED").ok();
    finish(run(&cli, env_seed.as_deref()))
}
