//! Empirical Laplace functionals and moments of simulated occupation times,
//! compared with the limit along a ladder of horizons.
//!
//! Occupation values are divided by the mass of φ, so every comparison
//! targets ξ itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::limit::log_laplace;
use crate::sim::{run_replicates, ReplicateResult, SimConfig};
use crate::stats::Summary;
use crate::volterra::{LaplaceSpec, SolverGrid};
use crate::Error;

/// Added to the stream seed for each rung of the horizon ladder.
pub const RUNG_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MIN_REPLICATES: usize = 100;
pub const DEFAULT_BIAS_ALLOWANCE: f64 = 0.02;
pub const DEFAULT_SOLVER_STEPS: usize = 2000;
/// Relative tolerance of the limit-variance check.
pub const VARIANCE_TOLERANCE: f64 = 0.25;
const Z_GATE: f64 = 3.0;

fn default_bias() -> f64 {
    DEFAULT_BIAS_ALLOWANCE
}

fn default_solver_steps() -> usize {
    DEFAULT_SOLVER_STEPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Seed of rung `rung` of a ladder started from `seed`.
pub fn rung_seed(seed: u64, rung: usize) -> u64 {
    seed.wrapping_add((rung as u64).wrapping_mul(RUNG_SEED_STRIDE))
}

/// Positions of the spec times among the checkpoint times.
fn spec_columns(times: &[f64], spec: &LaplaceSpec) -> Result<Vec<usize>> {
    spec.times()
        .map(|t| {
            times.iter().position(|&c| (c - t).abs() <= 1e-12).ok_or_else(|| {
                Error::Config(format!("spec time {t} is not among the checkpoints {times:?}"))
            })
        })
        .collect()
}

fn check_same_times(results: &[ReplicateResult]) -> Result<&[f64]> {
    let times = &results[0].times;
    if results.iter().any(|r| &r.times != times) {
        return Err(Error::Config("replicates have different checkpoint times".into()));
    }
    Ok(times)
}

/// Sample mean of `exp{-Σ θ_k ξ_T(t_k)}` over the replicates and its standard
/// error. Every spec time must be one of the checkpoints.
pub fn estimate_laplace(results: &[ReplicateResult], spec: &LaplaceSpec) -> Result<Estimate> {
    if results.is_empty() {
        return Err(Error::Config("no replicates to estimate from".into()));
    }
    let columns = spec_columns(check_same_times(results)?, spec)?;
    let samples: Vec<f64> = results
        .iter()
        .map(|r| {
            let xi = r.normalized();
            let exponent: f64 = spec.thetas().zip(&columns).map(|(theta, &c)| theta * xi[c]).sum();
            (-exponent).exp()
        })
        .collect();
    let s = Summary::of(&samples);
    Ok(Estimate {
        estimate: s.mean,
        stderr: s.stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    /// `mean`, `variance` or `scaled-mean` (the paired difference
    /// `ξ_T(t) - t ξ_T(1)`, zero in expectation).
    pub moment: String,
    pub t: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub theory: f64,
    pub z: f64,
    /// The theory value holds only in the limit `T → ∞`.
    pub asymptotic_only: bool,
}

fn z_score(empirical: f64, theory: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        (empirical - theory) / stderr
    } else if empirical == theory {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Mean, variance and time-scaling rows for every checkpoint. `k = None`
/// means `∫σ = ∞`, where the limit is zero.
pub fn moment_experiment(results: &[ReplicateResult], k: Option<f64>) -> Result<Vec<MomentRow>> {
    if results.len() < 30 {
        return Err(Error::Config(format!("need at least 30 replicates, got {}", results.len())));
    }
    let times = check_same_times(results)?.to_vec();
    let xi: Vec<Vec<f64>> = results.iter().map(|r| r.normalized()).collect();
    let column = |c: usize| xi.iter().map(|v| v[c]).collect::<Vec<f64>>();
    let last = times.len() - 1;
    let unit = ((times[last] - 1.0).abs() <= 1e-12).then_some(last);
    let mut rows = Vec::new();
    for (c, &t) in times.iter().enumerate() {
        let samples = column(c);
        let s = Summary::of(&samples);
        rows.push(MomentRow {
            moment: "mean".into(),
            t,
            empirical: s.mean,
            stderr: s.stderr,
            theory: t,
            z: z_score(s.mean, t, s.stderr),
            asymptotic_only: false,
        });
        let theory = match k {
            Some(k) => 2.0 * k * t * t / PI,
            None => 0.0,
        };
        let se = Summary::variance_stderr(&samples);
        rows.push(MomentRow {
            moment: "variance".into(),
            t,
            empirical: s.variance,
            stderr: se,
            theory,
            z: z_score(s.variance, theory, se),
            asymptotic_only: true,
        });
        if let Some(u) = unit.filter(|&u| u != c) {
            let paired: Vec<f64> = xi.iter().map(|v| v[c] - t * v[u]).collect();
            let p = Summary::of(&paired);
            rows.push(MomentRow {
                moment: "scaled-mean".into(),
                t,
                empirical: p.mean,
                stderr: p.stderr,
                theory: 0.0,
                z: z_score(p.mean, 0.0, p.stderr),
                asymptotic_only: false,
            });
        }
    }
    Ok(rows)
}

/// Input of [`ergodic_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: SimConfig,
    #[serde(rename = "T_ladder")]
    pub horizons: Vec<f64>,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub spec: LaplaceSpec,
    #[serde(default = "default_bias")]
    pub bias_allowance: f64,
    /// Steps of the `[0, 1]` solver grid used for the theory value.
    #[serde(default = "default_solver_steps")]
    pub solver_steps: usize,
}

impl ExperimentConfig {
    pub fn new(base: SimConfig, horizons: Vec<f64>, replicates: usize, spec: LaplaceSpec) -> Self {
        Self {
            base,
            horizons,
            replicates,
            spec,
            bias_allowance: DEFAULT_BIAS_ALLOWANCE,
            solver_steps: DEFAULT_SOLVER_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "L")]
    pub window: f64,
    pub dt: f64,
    pub seed: u64,
    pub laplace: Estimate,
    /// `|laplace - limit|`.
    pub gap: f64,
    pub moments: Vec<MomentRow>,
    pub peak_population_max: usize,
    pub peak_population_mean: f64,
    pub branch_events: u64,
}

impl Rung {
    fn row(&self, moment: &str, t: f64) -> Option<&MomentRow> {
        self.moments.iter().find(|r| r.moment == moment && (r.t - t).abs() <= 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    /// `None` when `∫σ = ∞`.
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub limit_laplace: f64,
    /// Exact at every T: `t_k`.
    pub mean: Vec<f64>,
    /// Limit variance of ξ(1), `2K/π` (zero when degenerate).
    pub variance_t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Distance to the threshold, positive when passing.
    pub margin: f64,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: LaplaceSpec,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    pub rungs: Vec<Rung>,
    pub theory: Theory,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// Runs the ladder and grades it.
///
/// Verdicts: `exact-mean` always, as a gate; when it passes, either
/// `laplace-limit`, `laplace-trend`, `limit-variance` and `self-similarity`
/// (finite K) or `degenerate-trend` (infinite K).
pub fn ergodic_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ExperimentConfig { base, horizons, replicates, spec, bias_allowance, solver_steps } = config;
    if *replicates < MIN_REPLICATES {
        return Err(Error::Config(format!("R must be at least {MIN_REPLICATES}, got {replicates}")));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("T_ladder must be non-empty and increasing".into()));
    }
    spec_columns(&base.checkpoints, spec)?;
    base.sigma.validate()?;
    let k = base.sigma.k();
    let limit_laplace = match k {
        Some(k) => log_laplace(spec, k, SolverGrid::new(1.0, *solver_steps)?)?.exp(),
        None => 1.0,
    };
    let theory = Theory {
        k,
        limit_laplace,
        mean: base.checkpoints.clone(),
        variance_t1: k.map_or(0.0, |k| 2.0 * k / PI),
    };

    let mut rungs = Vec::with_capacity(horizons.len());
    let mut samples_by_rung = Vec::with_capacity(horizons.len());
    for (i, &horizon) in horizons.iter().enumerate() {
        let mut rung_config = base.for_horizon(horizon);
        rung_config.seed = rung_seed(base.seed, i);
        rung_config.replicate_index = 0;
        let results = run_replicates(&rung_config, *replicates)?;
        let laplace = estimate_laplace(&results, spec)?;
        let peaks: Vec<f64> = results.iter().map(|r| r.peak_population as f64).collect();
        rungs.push(Rung {
            horizon,
            window: rung_config.window(),
            dt: rung_config.step(),
            seed: rung_config.seed,
            laplace,
            gap: (laplace.estimate - limit_laplace).abs(),
            moments: moment_experiment(&results, k)?,
            peak_population_max: results.iter().map(|r| r.peak_population).max().unwrap_or(0),
            peak_population_mean: Summary::of(&peaks).mean,
            branch_events: results.iter().map(|r| r.branch_events).sum(),
        });
        samples_by_rung.push(results);
    }

    let mut verdicts = vec![exact_mean_verdict(&rungs)];
    if verdicts[0].passed {
        let last = &rungs[rungs.len() - 1];
        match k {
            Some(k) => {
                verdicts.push(laplace_limit_verdict(last, limit_laplace, *bias_allowance));
                verdicts.push(laplace_trend_verdict(&rungs));
                if k > 0.0 {
                    if let Some(v) = variance_verdict(last, k) {
                        verdicts.push(v);
                    }
                }
                if let Some(v) = self_similarity_verdict(&samples_by_rung[rungs.len() - 1], spec)? {
                    verdicts.push(v);
                }
            }
            None => verdicts.push(degenerate_verdict(&rungs)),
        }
    }
    Ok(ExperimentReport {
        spec: spec.clone(),
        replicates: *replicates,
        seed: base.seed,
        rungs,
        theory,
        verdicts,
    })
}

fn exact_mean_verdict(rungs: &[Rung]) -> Verdict {
    let worst = rungs
        .iter()
        .flat_map(|r| r.moments.iter().filter(|m| m.moment == "mean").map(move |m| (r.horizon, m)))
        .max_by(|a, b| a.1.z.abs().total_cmp(&b.1.z.abs()));
    match worst {
        Some((horizon, row)) => Verdict::new(
            "exact-mean",
            Z_GATE - row.z.abs(),
            format!("largest |z| = {:.3} at T = {horizon}, t = {}", row.z.abs(), row.t),
        ),
        None => Verdict::new("exact-mean", -1.0, "no mean rows".into()),
    }
}

fn laplace_limit_verdict(last: &Rung, limit: f64, bias: f64) -> Verdict {
    let allowed = Z_GATE * last.laplace.stderr + bias;
    Verdict::new(
        "laplace-limit",
        allowed - last.gap,
        format!(
            "T = {}: |{:.5} - {:.5}| = {:.5}, allowed {:.5}",
            last.horizon, last.laplace.estimate, limit, last.gap, allowed
        ),
    )
}

fn laplace_trend_verdict(rungs: &[Rung]) -> Verdict {
    let margin = rungs
        .windows(2)
        .map(|w| w[0].gap - w[1].gap)
        .fold(f64::INFINITY, f64::min);
    let margin = if margin == f64::INFINITY { 0.0 } else { margin };
    let gaps: Vec<String> = rungs.iter().map(|r| format!("{:.5}", r.gap)).collect();
    Verdict {
        name: "laplace-trend".into(),
        passed: margin > 0.0 || rungs.len() < 2,
        margin,
        detail: format!("gaps along the ladder: {}", gaps.join(", ")),
    }
}

fn variance_verdict(last: &Rung, k: f64) -> Option<Verdict> {
    let row = last.row("variance", 1.0)?;
    let target = 2.0 * k / PI;
    let relative = (row.empirical - target).abs() / target;
    Some(Verdict::new(
        "limit-variance",
        VARIANCE_TOLERANCE - relative,
        format!("T = {}: {:.5} vs {:.5} ({:.1}% off)", last.horizon, row.empirical, target, 100.0 * relative),
    ))
}

/// `E exp{-θ ξ_T(t)}` against `E exp{-θ t ξ_T(1)}` for single-time specs,
/// paired over replicates.
fn self_similarity_verdict(results: &[ReplicateResult], spec: &LaplaceSpec) -> Result<Option<Verdict>> {
    let times = check_same_times(results)?;
    let Some(unit) = times.iter().position(|&t| (t - 1.0).abs() <= 1e-12) else {
        return Ok(None);
    };
    if spec.pairs().len() != 1 {
        return Ok(None);
    }
    let theta = spec.pairs()[0].0;
    let mut worst: Option<(f64, f64, f64)> = None;
    for (c, &t) in times.iter().enumerate().filter(|&(c, _)| c != unit) {
        let diff: Vec<f64> = results
            .iter()
            .map(|r| {
                let xi = r.normalized();
                (-theta * xi[c]).exp() - (-theta * t * xi[unit]).exp()
            })
            .collect();
        let s = Summary::of(&diff);
        let margin = Z_GATE * s.stderr - s.mean.abs();
        if worst.is_none_or(|w| margin < w.0) {
            worst = Some((margin, t, s.mean));
        }
    }
    Ok(worst.map(|(margin, t, mean)| {
        Verdict::new("self-similarity", margin, format!("t = {t}: paired difference {mean:.5}"))
    }))
}

fn degenerate_verdict(rungs: &[Rung]) -> Verdict {
    let (first, last) = (&rungs[0], &rungs[rungs.len() - 1]);
    let increasing = rungs.windows(2).all(|w| w[1].laplace.estimate > w[0].laplace.estimate);
    let pooled = first.laplace.stderr.hypot(last.laplace.stderr);
    let rise = last.laplace.estimate - first.laplace.estimate;
    let margin = rise - Z_GATE * pooled;
    let values: Vec<String> = rungs.iter().map(|r| format!("{:.5}", r.laplace.estimate)).collect();
    Verdict {
        name: "degenerate-trend".into(),
        passed: increasing && margin >= 0.0 && rungs.len() >= 2,
        margin,
        detail: format!(
            "Laplace along the ladder: {}; rise {:.5} vs 3 pooled stderr {:.5}",
            values.join(", "),
            rise,
            Z_GATE * pooled
        ),
    }
}
