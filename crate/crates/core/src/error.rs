use alloc::string::String;

/// Errors surfaced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Shapes or architectures of two operands do not match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A loss, gradient, or prediction became NaN or infinite.
    #[error("non-finite value in {component}")]
    NonFinite { component: &'static str },

    /// A training component failed; aborts the run.
    #[error("{component} produced a non-finite value at environment step {step}")]
    Training { component: &'static str, step: u64 },

    /// Rejection sampling of a start state gave up.
    #[error("could not sample a start state away from the walls after {0} attempts")]
    StartSampling(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
