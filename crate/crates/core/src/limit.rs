//! Functionals of the limit occupation process ξ.
//!
//! Everything is read off the solution Λ of the Volterra equation:
//!
//! ```text
//! log E exp{-Σ θ_k ξ(t_k)} = K ∫_{1-t_n}^1 Λ(s)² ds - Σ t_k θ_k
//! ```
//!
//! For a single mass θ the extended solution `h(s) = Λ(s, 1)` also encodes the
//! Lévy measure ν of ξ(1): `1 - K h(θ)²` is the Laplace transform of `x ν(dx)`,
//! `∫ x ν(dx) = 1` and `∫ x² ν(dx) = 2K/π`. ν itself is never built.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};
use crate::volterra::{solve_lambda, solve_lambda_extended, LambdaGrid, LaplaceSpec, SolverGrid};
use crate::Error;

/// Points a grid needs below `s = 0.01` for the slope estimate.
const SLOPE_MIN_POINTS: usize = 10;
const SLOPE_WINDOW: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawReport {
    pub spec: LaplaceSpec,
    #[serde(rename = "K")]
    pub k: f64,
    pub log_laplace: f64,
    /// `E ξ(t_k) = t_k`.
    pub mean_vector: Vec<f64>,
    /// `Var ξ(t_k) = 2K t_k² / π`.
    pub covariance_diag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMomentReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    pub monotonicity_orders_checked: usize,
    pub alternation_ok: bool,
    /// Smallest `(-1)^j Δ^j g` seen at each order `j = 1..=max_order`.
    pub worst_by_order: Vec<f64>,
    pub tolerance: f64,
}

fn check_k(k: f64, allow_zero: bool) -> Result<()> {
    ensure_finite("K", k)?;
    if k < 0.0 || (!allow_zero && k == 0.0) {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(Error::Domain(format!("K must be {bound}, got {k}")));
    }
    Ok(())
}

/// `K ∫ Λ²` over whole grid cells from the last node at or below `from`.
/// Λ vanishes on that stretch, so this is also the integral over `[0, 1]`.
fn correction(lambda: &LambdaGrid, from: f64) -> f64 {
    let start = lambda.grid.point((from / lambda.grid.step()).floor() as usize);
    lambda.k * lambda.integral_sq(start, lambda.grid.end())
}

/// `K ∫_{1-t_n}^1 Λ² ds - Σ t_k θ_k`, with Λ from the marching solver and the
/// integral by the trapezoid rule on the solver grid.
pub fn log_laplace(spec: &LaplaceSpec, k: f64, grid: SolverGrid) -> Result<f64> {
    check_k(k, true)?;
    let exact = spec.weighted_time();
    if spec.is_zero() {
        return Ok(0.0);
    }
    if k == 0.0 {
        return Ok(-exact);
    }
    let lambda = solve_lambda(spec, k, grid)?;
    Ok(correction(&lambda, spec.zero_segment_end()) - exact)
}

/// Mean and variance of ξ(t): `(t, 2K t²/π)`.
pub fn xi_cumulants(k: f64, t: f64) -> Result<(f64, f64)> {
    check_k(k, false)?;
    ensure_finite("t", t)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
    }
    Ok((t, 2.0 * k * t * t / PI))
}

pub fn limit_law_report(spec: &LaplaceSpec, k: f64, grid: SolverGrid) -> Result<LimitLawReport> {
    check_k(k, true)?;
    let log_laplace = log_laplace(spec, k, grid)?;
    let times: Vec<f64> = spec.times().collect();
    Ok(LimitLawReport {
        spec: spec.clone(),
        k,
        log_laplace,
        covariance_diag: times.iter().map(|t| 2.0 * k * t * t / PI).collect(),
        mean_vector: times,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Estimate of `lim_{s→0} Λ Λ'(s)`, which is `θ²/π` for every K.
    pub value: f64,
    /// Set when the solution is identically zero (θ = 0).
    pub degenerate: bool,
}

fn check_slope_grid(grid: &SolverGrid) -> Result<()> {
    let below = (0..=grid.steps()).take_while(|&i| grid.point(i) < SLOPE_WINDOW).count();
    if below < SLOPE_MIN_POINTS {
        return Err(Error::Config(format!(
            "grid step {} leaves {below} points below s = {SLOPE_WINDOW}, need {SLOPE_MIN_POINTS}",
            grid.step()
        )));
    }
    Ok(())
}

fn slope_from(lambda: &LambdaGrid) -> SlopeEstimate {
    // (h²(s_1) - h²(s_0)) / (2 (s_1 - s_0)) on the first cell
    let (h0, h1) = (lambda.at(0), lambda.at(1));
    let value = (h1 * h1 - h0 * h0) / (2.0 * lambda.grid.step());
    SlopeEstimate {
        value,
        degenerate: lambda.values.iter().all(|&v| v == 0.0),
    }
}

/// Finite-difference estimate of `lim_{s→0} h h'(s)` for the extended
/// solution with mass θ.
pub fn slope_at_origin(theta: f64, k: f64, grid: SolverGrid) -> Result<SlopeEstimate> {
    check_k(k, false)?;
    check_slope_grid(&grid)?;
    Ok(slope_from(&solve_lambda_extended(theta, k, grid)?))
}

/// `lim_{s→0} h h'(s)` for `h = Λ(·, 1)`; the limit is `1/π`.
pub fn small_s_slope_check(k: f64, grid: SolverGrid) -> Result<f64> {
    Ok(slope_at_origin(1.0, k, grid)?.value)
}

/// Finite-difference check that `g(θ) = 1 - K h(θ)²` is completely monotone
/// on `theta_grid`, plus the first two moments of ν read off `g` at 0.
///
/// `grid` is the solver grid for `h`; it must reach the last θ. Differences
/// up to `max_order` must satisfy `(-1)^j Δ^j g ≥ -(1e-6 + 10 Δ)`.
pub fn complete_monotonicity_probe(
    k: f64,
    theta_grid: &[f64],
    max_order: usize,
    grid: SolverGrid,
) -> Result<LevyMomentReport> {
    check_k(k, false)?;
    if !(1..=4).contains(&max_order) {
        return Err(Error::Config(format!("max_order must be in 1..=4, got {max_order}")));
    }
    if theta_grid.len() < max_order + 1 {
        return Err(Error::Config(format!(
            "theta_grid needs at least {} points, got {}",
            max_order + 1,
            theta_grid.len()
        )));
    }
    check_uniform(theta_grid)?;
    let last = theta_grid[theta_grid.len() - 1];
    if grid.end() < last * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "grid.S = {} does not reach theta = {last}",
            grid.end()
        )));
    }
    check_slope_grid(&grid)?;
    let tolerance = 1e-6 + 10.0 * grid.step();
    let h = solve_lambda_extended(1.0, k, grid)?;
    let g = |s: f64| {
        let v = h.interpolate(s);
        1.0 - k * v * v
    };

    let mut diffs: Vec<f64> = theta_grid.iter().map(|&s| g(s)).collect();
    let mut worst_by_order = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        let worst = diffs.iter().map(|d| sign * d).fold(f64::INFINITY, f64::min);
        worst_by_order.push(worst);
    }
    Ok(LevyMomentReport {
        k,
        first_moment: g(0.0),
        second_moment: 2.0 * k * slope_from(&h).value,
        monotonicity_orders_checked: max_order,
        alternation_ok: worst_by_order.iter().all(|&w| w >= -tolerance),
        worst_by_order,
        tolerance,
    })
}

fn check_uniform(points: &[f64]) -> Result<()> {
    if points.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::Config("theta_grid must hold finite positive values".into()));
    }
    let step = points[1] - points[0];
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Config("theta_grid must be increasing".into()));
    }
    for w in points.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(w[1].abs()) {
            return Err(Error::Config("theta_grid must be uniformly spaced".into()));
        }
    }
    Ok(())
}

/// `(1/K) ∫_0^{Kθ} h(s)² ds` for each K, with `h` the extended solution of
/// the `K = 1` equation. As `K → ∞` the values approach θ.
///
/// `grid` must reach `θ · max(K)`.
pub fn degenerate_limit_curve(theta: f64, k_list: &[f64], grid: SolverGrid) -> Result<Vec<(f64, f64)>> {
    ensure_finite("theta", theta)?;
    if theta <= 0.0 {
        return Err(Error::Domain(format!("theta must be > 0, got {theta}")));
    }
    if k_list.is_empty() {
        return Err(Error::Config("K_list is empty".into()));
    }
    for &k in k_list {
        check_k(k, false)?;
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("K_list must be increasing".into()));
    }
    let reach = theta * k_list[k_list.len() - 1];
    if grid.end() < reach * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "grid.S = {} is shorter than theta * max K = {reach}",
            grid.end()
        )));
    }
    let h = solve_lambda_extended(1.0, 1.0, grid)?;
    Ok(k_list.iter().map(|&k| (k, h.integral_sq(0.0, k * theta) / k)).collect())
}
