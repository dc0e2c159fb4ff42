//! Numerical companion to the occupation-time ergodic limits of a
//! site-dependent branching Brownian motion on the line.
//!
//! - [`special`]: Dawson's integral and the `Q` function.
//! - [`volterra`]: the half-order Volterra equation for Λ and its solvers.
//! - [`limit`]: log-Laplace functionals, cumulants and Lévy-measure probes.
//! - [`sim`]: Monte Carlo simulation of the particle system.
//! - [`harness`]: empirical estimates against the limit along a T ladder.
//! - [`convergence`]: grid-refinement study of the solver.

pub mod convergence;
pub mod error;
pub mod harness;
pub mod limit;
pub mod sim;
pub mod special;
pub mod stats;
pub mod volterra;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use limit::{LevyMomentReport, LimitLawReport};
pub use sim::{ReplicateResult, SigmaProfile, SimConfig, TestFunction};
pub use volterra::{LambdaGrid, LaplaceSpec, SolverGrid};
