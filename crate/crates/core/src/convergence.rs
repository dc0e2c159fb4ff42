//! Grid-refinement study of the Volterra solver.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::volterra::{solve_lambda, LambdaGrid, LaplaceSpec, SolverGrid};
use crate::Error;

/// Differences below this are treated as rounding noise when fitting orders.
const ROUNDING_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub spec: LaplaceSpec,
    #[serde(rename = "K")]
    pub k: f64,
    /// Steps of the coarsest `[0, 1]` grid.
    pub base_steps: usize,
    /// Number of step halvings.
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub step: f64,
    /// Sup-norm distance, at this grid's nodes, to the next finer solution.
    pub sup_difference: Option<f64>,
    /// `log2` of the ratio of this difference to the next one.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: LaplaceSpec,
    #[serde(rename = "K")]
    pub k: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `-log2(difference)` against the refinement
    /// level; `None` when fewer than two differences exceed rounding.
    pub estimated_order: Option<f64>,
}

fn coarse_distance(coarse: &LambdaGrid, fine: &LambdaGrid) -> f64 {
    let ratio = fine.grid.steps() / coarse.grid.steps();
    coarse
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine.values[i * ratio]).abs())
        .fold(0.0, f64::max)
}

/// Solves on `base_steps · 2^j` steps for `j = 0..=refinements` and reports
/// the self-differences and observed orders.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if config.refinements == 0 {
        return Err(Error::Config("refinements must be >= 1".into()));
    }
    if config.refinements > 20 {
        return Err(Error::Config(format!("refinements = {} is too many", config.refinements)));
    }
    let solutions = (0..=config.refinements)
        .map(|j| {
            let grid = SolverGrid::new(1.0, config.base_steps << j)?;
            solve_lambda(&config.spec, config.k, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = solutions.windows(2).map(|w| coarse_distance(&w[0], &w[1])).collect();
    let usable = |d: f64| d > ROUNDING_FLOOR;
    let rows = solutions
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let here = diffs.get(j).copied();
            let order = match (here, diffs.get(j + 1)) {
                (Some(a), Some(&b)) if usable(a) && usable(b) => Some((a / b).log2()),
                _ => None,
            };
            ConvergenceRow {
                steps: s.grid.steps(),
                step: s.grid.step(),
                sup_difference: here,
                order,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        spec: config.spec.clone(),
        k: config.k,
        rows,
        estimated_order: fitted_order(&diffs),
    })
}

fn fitted_order(diffs: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > ROUNDING_FLOOR)
        .map(|(j, d)| (j as f64, -d.log2()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
