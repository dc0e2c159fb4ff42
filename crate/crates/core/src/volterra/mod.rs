//! Nonlinear Volterra equations with the Abel kernel `1/sqrt(2π(s-u))`:
//!
//! ```text
//! y(s) = F(s) - K ∫_0^s y(u)² / sqrt(2π(s-u)) du
//! ```
//!
//! with either the multi-time forcing
//! `F(s) = Σ θ_k ∫_0^s 1{1-u ≤ t_k} / sqrt(2π(s-u)) du` on `[0, 1]`, or the
//! single-argument forcing `F(s) = θ sqrt(2s/π)` on an arbitrary `[0, S]`.
//! The unique nonnegative solution is what the limit Laplace functional is
//! built from.

mod abel;
mod solver;

pub use abel::{half_fractional_integral, AbelWeights};
pub use solver::{
    equation_residual, picard_solve, solve_forcing, solve_lambda, solve_lambda_extended,
    PicardSolution,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};
use crate::Error;

/// Evaluation points `((θ_1, t_1), …, (θ_n, t_n))` of a finite-dimensional
/// Laplace functional, with `0 ≤ t_1 < … < t_n ≤ 1` and `θ_k ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct LaplaceSpec {
    pairs: Vec<(f64, f64)>,
}

impl LaplaceSpec {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("pairs: at least one (theta, t) pair is required".into()));
        }
        for (k, &(theta, t)) in pairs.iter().enumerate() {
            if !theta.is_finite() || theta < 0.0 {
                return Err(Error::Config(format!("pairs[{k}].theta must be finite and >= 0, got {theta}")));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("pairs[{k}].t must lie in [0, 1], got {t}")));
            }
            if k > 0 && t <= pairs[k - 1].1 {
                return Err(Error::Config(format!(
                    "pairs[{k}].t = {t} must be strictly greater than pairs[{}].t = {}",
                    k - 1,
                    pairs[k - 1].1
                )));
            }
        }
        Ok(Self { pairs })
    }

    pub fn single(theta: f64, t: f64) -> Result<Self> {
        Self::new(vec![(theta, t)])
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    pub fn last_time(&self) -> f64 {
        self.pairs[self.pairs.len() - 1].1
    }

    /// `1 - t_n`: the solution vanishes identically below this point.
    pub fn zero_segment_end(&self) -> f64 {
        1.0 - self.last_time()
    }

    /// `Σ t_k θ_k`, the linear part of the limit log-Laplace exponent.
    pub fn weighted_time(&self) -> f64 {
        self.pairs.iter().map(|&(theta, t)| theta * t).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.iter().all(|p| p.0 == 0.0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for LaplaceSpec {
    type Error = Error;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(pairs)
    }
}

impl From<LaplaceSpec> for Vec<(f64, f64)> {
    fn from(spec: LaplaceSpec) -> Self {
        spec.pairs
    }
}

/// Uniform grid `s_i = iΔ`, `i = 0..=m`, on `[0, S]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct SolverGrid {
    end: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    #[serde(rename = "S")]
    end: f64,
    m: usize,
}

impl TryFrom<RawGrid> for SolverGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::new(raw.end, raw.m)
    }
}

impl From<SolverGrid> for RawGrid {
    fn from(grid: SolverGrid) -> Self {
        RawGrid {
            end: grid.end,
            m: grid.steps,
        }
    }
}

impl SolverGrid {
    pub fn new(end: f64, steps: usize) -> Result<Self> {
        if !end.is_finite() || end <= 0.0 {
            return Err(Error::Config(format!("grid.S must be finite and positive, got {end}")));
        }
        if steps < 2 {
            return Err(Error::Config(format!("grid.m must be at least 2, got {steps}")));
        }
        Ok(Self { end, steps })
    }

    /// The grid on `[0, end]` whose step is as close as possible to `step`.
    pub fn with_step(end: f64, step: f64) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        Self::new(end, (end / step).round().max(2.0) as usize)
    }

    /// Right endpoint `S`.
    pub fn end(&self) -> f64 {
        self.end
    }

    /// Number of steps `m`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size `Δ = S/m`.
    pub fn step(&self) -> f64 {
        self.end / self.steps as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.steps {
            self.end
        } else {
            i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| self.point(i))
    }

    /// The grid with each step split into `factor` pieces.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            end: self.end,
            steps: self.steps * factor.max(1),
        }
    }
}

/// Right-hand side of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Forcing {
    /// Multi-time forcing on `[0, 1]`.
    Spec(LaplaceSpec),
    /// `θ sqrt(2s/π)` on `[0, ∞)`.
    Single { theta: f64 },
}

impl Forcing {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Forcing::Spec(spec) => spec
                .pairs()
                .iter()
                .map(|&(theta, t)| theta * (2.0 * (s - (1.0 - t)).max(0.0) / PI).sqrt())
                .sum(),
            Forcing::Single { theta } => theta * (2.0 * s.max(0.0) / PI).sqrt(),
        }
    }

    /// Upper bound of `s` for which the forcing is defined.
    pub fn horizon(&self) -> f64 {
        match self {
            Forcing::Spec(_) => 1.0,
            Forcing::Single { .. } => f64::INFINITY,
        }
    }

    pub fn sample(&self, grid: &SolverGrid) -> Vec<f64> {
        grid.points().map(|s| self.value(s)).collect()
    }
}

/// Closed form of `Σ θ_k ∫_0^s 1_{[0,t_k]}(1-u) / sqrt(2π(s-u)) du`, namely
/// `Σ θ_k sqrt(2 max(0, s - (1 - t_k)) / π)`.
pub fn forcing_term(spec: &LaplaceSpec, s: f64) -> Result<f64> {
    ensure_finite("s", s)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0, 1], got {s}")));
    }
    Ok(Forcing::Spec(spec.clone()).value(s))
}

/// Grid solution of the equation together with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub grid: SolverGrid,
    pub values: Vec<f64>,
    /// The nonlinearity constant `K = γ ∫ σ`.
    pub k: f64,
    pub forcing: Forcing,
}

impl LambdaGrid {
    /// Piecewise-linear interpolant of the grid values.
    pub fn interpolate(&self, s: f64) -> f64 {
        let dx = self.grid.step();
        let m = self.grid.steps();
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= self.grid.end() {
            return self.values[m];
        }
        let pos = s / dx;
        let i = (pos.floor() as usize).min(m - 1);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoid rule for `∫_from^to Λ(s)² ds` on the grid. A partial cell
    /// at `from` uses the interpolated value there.
    pub fn integral_sq(&self, from: f64, to: f64) -> f64 {
        let dx = self.grid.step();
        let m = self.grid.steps();
        let from = from.clamp(0.0, self.grid.end());
        let to = to.clamp(0.0, self.grid.end());
        if to <= from {
            return 0.0;
        }
        let sq = |v: f64| v * v;
        let lo = ((from / dx).ceil() as usize).min(m);
        let hi = ((to / dx).floor() as usize).min(m);
        if lo > hi {
            // both ends inside one cell
            let (a, b) = (self.interpolate(from), self.interpolate(to));
            return 0.5 * (to - from) * (sq(a) + sq(b));
        }
        let mut total = 0.0;
        for i in lo..hi {
            total += 0.5 * dx * (sq(self.values[i]) + sq(self.values[i + 1]));
        }
        let head = self.grid.point(lo) - from;
        if head > 0.0 {
            total += 0.5 * head * (sq(self.interpolate(from)) + sq(self.values[lo]));
        }
        let tail = to - self.grid.point(hi);
        if tail > 0.0 {
            total += 0.5 * tail * (sq(self.values[hi]) + sq(self.interpolate(to)));
        }
        total
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at grid point `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_distance(&self, other: &LambdaGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
