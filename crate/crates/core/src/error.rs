use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("tensor dimension {got} exceeds cap {cap}")]
    DimensionLimit { got: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    BadTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("parameter {name}={value} sits on a boundary where {diverges} diverges")]
    Boundary {
        name: &'static str,
        value: f64,
        diverges: &'static str,
    },

    #[error("Kraus operators do not satisfy completeness (deviation {0:.3e})")]
    NotCptp(f64),

    #[error("covariance matrix is not a bona fide quantum state (min eigenvalue of V + i\u{3a9}/2 is {0:.3e})")]
    NotBonaFide(f64),

    #[error("Fock truncation deficit {deficit:.3e} above limit {limit:.3e}; increase nmax")]
    Truncation { deficit: f64, limit: f64 },

    #[error("channel is not teleportation-covariant (witness unitary index {witness})")]
    NotCovariant { witness: usize },

    #[error(
        "teleportation simulation does not reproduce the channel (residual trace distance {0:.3e})"
    )]
    SimulationMismatch(f64),

    #[error("invalid channel spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
