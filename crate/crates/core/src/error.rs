use thiserror::Error;

/// Library-wide error type. The CLI maps these onto exit codes:
/// configuration problems -> 2, numerical/estimator failures -> 3,
/// missing measured expectations -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("{n_qubits} qubits exceeds the cap of {cap} for this operation")]
    SizeCap { n_qubits: usize, cap: usize },

    #[error("missing measured expectations for {count} required strings (first: {first})")]
    Coverage { count: usize, first: String },

    #[error("calibration matrix ill-conditioned: cond = {cond:.3e} exceeds cap {cap:.1e}")]
    IllConditioned { cond: f64, cap: f64 },

    #[error("CMX order-{order} system is singular for this trial state")]
    CmxSingular { order: usize },

    #[error("PDS({k}) Hankel system degenerate; trial state spans fewer than {k} eigenvalues")]
    PdsDegenerate { k: usize },

    #[error("ITE denominator {denom:.3e} below tolerance; tau too large for this truncation order")]
    IteNormalization { denom: f64 },

    #[error("every Krylov direction fell below the drop tolerance")]
    DegenerateSubspace,

    #[error("infimum radicand negative ({radicand:.3e}); estimate undefined at this order")]
    InfimumDomain { radicand: f64 },

    #[error("moment table covers order {have}, need order >= {need}")]
    InsufficientOrder { have: usize, need: usize },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}
