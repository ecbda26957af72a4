use alloc::string::String;

/// Errors raised by the core library.
///
/// [`Error::code`] gives a stable upper-case identifier used by the CLI.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("constant term {re}{im:+}i is not 1")]
    NotUnitNormalized { re: f64, im: f64 },
    #[error("nilpotential has a nonzero constant term")]
    NonzeroConstant,
    #[error("element index {index} out of range for {n} elements")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("operation needs the {0} multiplication rule")]
    WrongRule(&'static str),
    #[error("vacuum amplitude vanishes{}", match .time { Some(t) => alloc::format!(" at t = {t}"), None => String::new() })]
    VacuumZero { time: Option<f64> },
    #[error("(A, B, C) factorization is singular")]
    SingularFactorization,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConverged { iterations: usize, residual: f64 },
    #[error("feedback matrix is ill-conditioned (|det| = {det:e}) but no gamma vanishes cleanly")]
    IllConditioned { det: f64 },
    #[error("classification is ambiguous: {0}")]
    Ambiguous(String),
    #[error("invariants are degenerate: {0}")]
    Degenerate(String),
    #[error("state is not in the generic orbit")]
    NotInGenericOrbit,
    #[error("state does not have the required support: {0}")]
    UnsupportedForm(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "SHAPE",
            Error::NotUnitNormalized { .. } => "NOT_UNIT_NORMALIZED",
            Error::NonzeroConstant => "NONZERO_CONSTANT",
            Error::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            Error::WrongRule(_) => "WRONG_RULE",
            Error::VacuumZero { .. } => "VACUUM_ZERO",
            Error::SingularFactorization => "SINGULAR_FACTORIZATION",
            Error::NonConverged { .. } => "NONCONVERGED",
            Error::IllConditioned { .. } => "ILL_CONDITIONED",
            Error::Ambiguous(_) => "AMBIGUOUS",
            Error::Degenerate(_) => "DEGENERATE",
            Error::NotInGenericOrbit => "NOT_IN_GENERIC_ORBIT",
            Error::UnsupportedForm(_) => "UNSUPPORTED_FORM",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::InvalidPartition(_) => "INVALID_PARTITION",
            Error::InvalidState(_) => "INVALID_STATE",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
