use thiserror::Error;

/// Errors raised by the numerical kernels, the simulator and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates an invariant; the message names the field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The marching scheme produced a non-finite or inadmissible value.
    #[error("solver failure at s = {s}: {reason}")]
    SolverFailure { s: f64, reason: String },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last sup-norm change {last_change:e})")]
    IterationLimit { iterations: usize, last_change: f64 },

    #[error("replicate {replicate}: population reached {population}, above the cap of {cap}")]
    PopulationBlowUp {
        replicate: u64,
        population: usize,
        cap: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
