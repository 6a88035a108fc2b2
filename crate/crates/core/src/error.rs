use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid fractional order {0}: must satisfy 0 < alpha <= 1")]
    InvalidAlpha(f64),

    #[error("derivative did not converge: {0}")]
    Convergence(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("step size underflow at t = {t}: step {step:e} below minimum")]
    StepUnderflow { t: f64, step: f64 },

    #[error("step budget of {0} exhausted before reaching the end point")]
    MaxSteps(usize),

    #[error("linear system is numerically singular (pivot ratio {ratio:e})")]
    SingularSystem { ratio: f64 },

    #[error("not a fundamental set: Wronskian at t0 is {det}, expected 1")]
    Fundamentality { det: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid problem: {field}: {message}")]
    Invalid { field: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
