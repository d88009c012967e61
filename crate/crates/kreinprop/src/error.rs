use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("not admissible: {invariant} (residual {residual:.3e}, tolerance {tol:.3e})")]
    NotAdmissible {
        invariant: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("complementarity failure: smallest singular value {smallest:.3e}")]
    ComplementarityFailure { smallest: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("not strongly stable: smallest |eigenvalue| {min_abs:.3e}")]
    NotStronglyStable { min_abs: f64 },

    #[error("matrix exponential produced non-finite entries at step {step}")]
    MatrixExp { step: usize },

    #[error("assumption violated at t = {t}: {what}")]
    AssumptionViolation { what: String, t: f64 },

    #[error("z = {re}{im:+}i is in the singular set (smallest singular value {smallest:.3e})")]
    SingularSet { re: f64, im: f64, smallest: f64 },

    #[error("kernel not injective at this discretization (smallest singular value {smallest:.3e})")]
    KernelNotInjective { smallest: f64 },

    #[error("truncation tail {tail:.3e} exceeds {limit:.1e} at nmax = {nmax}; raise nmax")]
    Truncation { tail: f64, limit: f64, nmax: usize },

    #[error("dump format error: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
