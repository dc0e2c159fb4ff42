//! Monte Carlo simulation of critical branching Brownian motion on the line
//! with site-dependent offspring law, started from a Poisson field of unit
//! intensity, and of its rescaled occupation time
//! `⟨X_T(t), φ⟩ = (1/T) ∫_0^{Tt} ⟨N(s), φ⟩ ds`.

mod engine;
pub mod profile;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use engine::simulate_replicate;
pub use profile::{SigmaProfile, SigmaShape, Support, TestFunction};

use crate::error::{ensure_finite, Result};
use crate::Error;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_POPULATION_CAP: usize = 1_000_000;
/// Window margin in units of `sqrt(T)`.
pub const WINDOW_SIGMAS: f64 = 8.0;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_cap() -> usize {
    DEFAULT_POPULATION_CAP
}

/// One simulation run. `L` and `dt` are derived from `T` when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Increasing fractions `t_k ∈ (0, 1]` of the horizon.
    pub checkpoints: Vec<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub window_halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub sigma: SigmaProfile,
    pub phi: TestFunction,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Stream index of the first replicate.
    #[serde(default)]
    pub replicate_index: u64,
    #[serde(default = "default_cap")]
    pub population_cap: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, checkpoints: Vec<f64>, sigma: SigmaProfile, phi: TestFunction) -> Self {
        Self {
            horizon,
            checkpoints,
            window_halfwidth: None,
            dt: None,
            sigma,
            phi,
            seed: DEFAULT_SEED,
            replicate_index: 0,
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }

    /// Same configuration at another horizon, with `L` and `dt` re-derived.
    pub fn for_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            window_halfwidth: None,
            dt: None,
            ..self.clone()
        }
    }

    /// Smallest admissible window, `support_radius + 8 sqrt(T)`.
    pub fn min_window(&self) -> f64 {
        self.phi.support_radius() + WINDOW_SIGMAS * self.horizon.sqrt()
    }

    pub fn window(&self) -> f64 {
        self.window_halfwidth.unwrap_or_else(|| self.min_window())
    }

    /// Occupation quadrature step, `min(0.05, T/2000)` unless given.
    pub fn step(&self) -> f64 {
        self.dt.unwrap_or_else(|| (self.horizon / 2000.0).min(0.05))
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("T", self.horizon)?;
        if self.horizon <= 0.0 {
            return Err(Error::Config(format!("T must be > 0, got {}", self.horizon)));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::Config("checkpoints is empty".into()));
        }
        for &t in &self.checkpoints {
            ensure_finite("checkpoints", t)?;
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("checkpoints must lie in (0, 1], got {t}")));
            }
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("checkpoints must be increasing".into()));
        }
        self.sigma.validate()?;
        self.phi.validate()?;
        let dt = self.step();
        ensure_finite("dt", dt)?;
        if dt <= 0.0 || dt > self.horizon / 100.0 {
            return Err(Error::Config(format!("dt must lie in (0, T/100], got {dt}")));
        }
        let window = self.window();
        ensure_finite("L", window)?;
        if window < self.min_window() * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "L = {window} is below support_radius + 8 sqrt(T) = {}",
                self.min_window()
            )));
        }
        if self.population_cap == 0 {
            return Err(Error::Config("population_cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    /// Stream index the replicate was drawn from.
    pub replicate: u64,
    /// Checkpoint fractions `t_k`.
    pub times: Vec<f64>,
    /// `⟨X_T(t_k), φ⟩`, not normalised by the mass of φ.
    pub values: Vec<f64>,
    /// Mass of φ, for normalisation.
    pub mass: f64,
    /// Largest number of particles alive at a multiple of `dt`.
    pub peak_population: usize,
    /// Branching events drawn where σ may be nonzero.
    pub branch_events: u64,
    /// Counts of 0, 1 and 2 offspring over those events.
    pub offspring: [u64; 3],
}

impl ReplicateResult {
    /// `⟨X_T(t_k), φ⟩ / ∫φ`, the sample of `ξ(t_k)`.
    pub fn normalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / self.mass).collect()
    }
}

/// Random stream for replicate `index`: ChaCha8 keyed by `seed` through
/// `seed_from_u64`, on stream number `index`. Streams for different indices
/// never overlap.
pub fn rng_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Poisson(2L) many independent uniform points on `[-L, L]`.
pub fn init_poisson_field<R: Rng + ?Sized>(half_width: f64, rng: &mut R) -> Result<Vec<f64>> {
    ensure_finite("L", half_width)?;
    if half_width <= 0.0 {
        return Err(Error::Domain(format!("L must be > 0, got {half_width}")));
    }
    let poisson = Poisson::new(2.0 * half_width).map_err(|e| Error::Domain(e.to_string()))?;
    let count = poisson.sample(rng) as usize;
    Ok((0..count).map(|_| rng.random_range(-half_width..=half_width)).collect())
}

/// Number of children for uniform `u`: 0 if `u < σ`, 2 if `u ≥ 1 − σ`, else 1.
pub fn branch_outcome(sigma: f64, u: f64) -> Result<usize> {
    if !(0.0..=0.5).contains(&sigma) {
        return Err(Error::Domain(format!("sigma must lie in [0, 1/2], got {sigma}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    Ok(if u < sigma {
        0
    } else if u >= 1.0 - sigma {
        2
    } else {
        1
    })
}

/// Replicates `replicate_index .. replicate_index + count`, each on its own
/// stream, returned in index order.
pub fn run_replicates(config: &SimConfig, count: usize) -> Result<Vec<ReplicateResult>> {
    if count == 0 {
        return Err(Error::Config("number of replicates must be >= 1".into()));
    }
    config.validate()?;
    let first = config.replicate_index;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let index = first + i;
            simulate_replicate(config, index, &mut rng_stream(config.seed, index))
        })
        .collect()
}
