//! Subcommand implementations. Each returns the files to write and a
//! one-line summary; `main` does the writing.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sdbbm_core::convergence::{convergence_study, ConvergenceConfig};
use sdbbm_core::harness::{ergodic_experiment, ExperimentConfig, ExperimentReport};
use sdbbm_core::limit::{complete_monotonicity_probe, degenerate_limit_curve, limit_law_report};
use sdbbm_core::sim::{run_replicates, SimConfig};
use sdbbm_core::special::q_function;
use sdbbm_core::volterra::{solve_lambda, solve_lambda_extended, LambdaGrid};
use sdbbm_core::{LaplaceSpec, SolverGrid};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::output::{json_bytes, Table};

pub struct Outcome {
    /// `(path, contents)`; a `None` path means stdout.
    pub files: Vec<(Option<PathBuf>, Vec<u8>)>,
    pub summary: String,
    /// Set when an acceptance gate failed.
    pub gate_failed: bool,
}

impl Outcome {
    fn one(out: Option<&Path>, bytes: Vec<u8>, summary: String) -> Self {
        Self {
            files: vec![(out.map(Path::to_path_buf), bytes)],
            summary,
            gate_failed: false,
        }
    }
}

fn parse<T: DeserializeOwned>(value: Value, what: &str) -> Result<T> {
    serde_json::from_value(value).with_context(|| format!("invalid {what} configuration"))
}

#[derive(Deserialize)]
struct SpecInput {
    pairs: LaplaceSpec,
    #[serde(rename = "K")]
    k: f64,
    grid: SolverGrid,
}

#[derive(Deserialize)]
struct ExtendedInput {
    theta: f64,
    #[serde(rename = "K")]
    k: f64,
    grid: SolverGrid,
}

#[derive(Deserialize)]
struct LevyInput {
    #[serde(rename = "K")]
    k: f64,
    theta_grid: Vec<f64>,
    max_order: usize,
    grid: SolverGrid,
}

#[derive(Deserialize)]
struct DegenerateInput {
    theta: f64,
    #[serde(rename = "K_list")]
    k_list: Vec<f64>,
    grid: SolverGrid,
}

#[derive(Deserialize)]
struct QInput {
    x: Vec<f64>,
}

#[derive(Deserialize)]
struct SimulateInput {
    #[serde(flatten)]
    config: SimConfig,
    #[serde(rename = "R", default = "one")]
    replicates: usize,
}

fn one() -> usize {
    1
}

fn lambda_table(lambda: &LambdaGrid) -> Table {
    let mut table = Table::new(&["s", "lambda"]);
    for (i, s) in lambda.grid.points().enumerate() {
        table.row([s, lambda.at(i)]);
    }
    table
}

pub fn solve_lambda_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let SpecInput { pairs, k, grid } = parse(input, "solve-lambda")?;
    let lambda = solve_lambda(&pairs, k, grid)?;
    let summary = format!("solve-lambda: {} nodes, Lambda(1) = {}", grid.steps() + 1, lambda.last());
    Ok(Outcome::one(out, lambda_table(&lambda).into_bytes(), summary))
}

pub fn lambda_extended_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let ExtendedInput { theta, k, grid } = parse(input, "lambda-extended")?;
    let lambda = solve_lambda_extended(theta, k, grid)?;
    let summary = format!("lambda-extended: Lambda({}) = {}", grid.end(), lambda.last());
    Ok(Outcome::one(out, lambda_table(&lambda).into_bytes(), summary))
}

pub fn log_laplace_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let SpecInput { pairs, k, grid } = parse(input, "log-laplace")?;
    let report = limit_law_report(&pairs, k, grid)?;
    let summary = format!("log-laplace: {}", report.log_laplace);
    Ok(Outcome::one(out, json_bytes(&report)?, summary))
}

pub fn levy_probe_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let LevyInput { k, theta_grid, max_order, grid } = parse(input, "levy-probe")?;
    let report = complete_monotonicity_probe(k, &theta_grid, max_order, grid)?;
    let summary = format!(
        "levy-probe: alternation {} up to order {}, moments {} and {}",
        if report.alternation_ok { "holds" } else { "fails" },
        report.monotonicity_orders_checked,
        report.first_moment,
        report.second_moment
    );
    Ok(Outcome::one(out, json_bytes(&report)?, summary))
}

pub fn degenerate_curve_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let DegenerateInput { theta, k_list, grid } = parse(input, "degenerate-curve")?;
    let curve = degenerate_limit_curve(theta, &k_list, grid)?;
    let mut table = Table::new(&["K", "value"]);
    for &(k, v) in &curve {
        table.row([k, v]);
    }
    let last = curve[curve.len() - 1];
    let summary = format!("degenerate-curve: value {} at K = {}", last.1, last.0);
    Ok(Outcome::one(out, table.into_bytes(), summary))
}

pub fn q_function_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let QInput { x } = parse(input, "q-function")?;
    let mut table = Table::new(&["x", "q"]);
    for &v in &x {
        let q = q_function(v).with_context(|| format!("x = {v}"))?;
        table.row([v, q]);
    }
    let summary = format!("q-function: {} values", table.rows());
    Ok(Outcome::one(out, table.into_bytes(), summary))
}

pub fn simulate_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let SimulateInput { config, replicates } = parse(input, "simulate")?;
    let results = run_replicates(&config, replicates)?;
    let n = config.checkpoints.len();
    let mut header = vec!["replicate".to_string()];
    header.extend((1..=n).map(|k| format!("t_{k}")));
    header.extend((1..=n).map(|k| format!("value_{k}")));
    header.push("peak_population".into());
    let mut table = Table::new(&header);
    for r in &results {
        let mut cells = vec![r.replicate.to_string()];
        cells.extend(r.times.iter().map(f64::to_string));
        cells.extend(r.values.iter().map(f64::to_string));
        cells.push(r.peak_population.to_string());
        table.row(cells);
    }
    let summary = format!("simulate: {} replicates, T = {}, seed {}", results.len(), config.horizon, config.seed);
    Ok(Outcome::one(out, table.into_bytes(), summary))
}

/// Per-rung table of an ergodic experiment.
pub fn experiment_table(report: &ExperimentReport) -> Table {
    let times = &report.theory.mean;
    let mut header: Vec<String> = ["T", "L", "dt", "R", "laplace", "laplace_stderr", "limit_laplace", "gap"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for t in times {
        header.push(format!("mean({t})"));
        header.push(format!("mean_stderr({t})"));
        header.push(format!("variance({t})"));
    }
    header.push("peak_population_max".into());
    let mut table = Table::new(&header);
    for rung in &report.rungs {
        let mut cells = vec![
            rung.horizon.to_string(),
            rung.window.to_string(),
            rung.dt.to_string(),
            report.replicates.to_string(),
            rung.laplace.estimate.to_string(),
            rung.laplace.stderr.to_string(),
            report.theory.limit_laplace.to_string(),
            rung.gap.to_string(),
        ];
        for &t in times {
            let find = |name: &str| {
                rung.moments
                    .iter()
                    .find(|m| m.moment == name && m.t == t)
                    .map_or(f64::NAN, |m| m.empirical)
            };
            let se = rung
                .moments
                .iter()
                .find(|m| m.moment == "mean" && m.t == t)
                .map_or(f64::NAN, |m| m.stderr);
            cells.push(find("mean").to_string());
            cells.push(se.to_string());
            cells.push(find("variance").to_string());
        }
        cells.push(rung.peak_population_max.to_string());
        table.row(cells);
    }
    table
}

pub fn verify_ergodic_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let config: ExperimentConfig = parse(input, "verify-ergodic")?;
    let report = ergodic_experiment(&config)?;
    let failed: Vec<&str> = report.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("verify-ergodic: all {} verdicts pass", report.verdicts.len())
    } else {
        format!("verify-ergodic: failed {}", failed.join(", "))
    };
    let csv_path = out.map(|p| p.with_extension("csv"));
    let mut files = vec![(out.map(Path::to_path_buf), json_bytes(&report)?)];
    if csv_path.is_some() {
        files.push((csv_path, experiment_table(&report).into_bytes()));
    }
    Ok(Outcome {
        files,
        summary,
        gate_failed: !report.passed(),
    })
}

pub fn convergence_study_cmd(input: Value, out: Option<&Path>) -> Result<Outcome> {
    let config: ConvergenceConfig = parse(input, "convergence-study")?;
    let report = convergence_study(&config)?;
    let summary = match report.estimated_order {
        Some(order) => format!("convergence-study: estimated order {order}"),
        None => "convergence-study: differences at rounding level".to_string(),
    };
    Ok(Outcome::one(out, json_bytes(&report)?, summary))
}
