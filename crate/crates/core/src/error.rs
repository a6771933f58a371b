use thiserror::Error;

/// Errors raised by the simulation, chain and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("padding violation: entry {index} of the padded signal is nonzero")]
    PaddingViolation { index: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid lambda {0}")]
    InvalidLambda(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("overlapping placements: {0}")]
    OverlapViolation(String),

    #[error("exact enumeration over {vertices} vertices exceeds the cap of {cap}")]
    EnumerationTooLarge { vertices: usize, cap: usize },

    #[error("eigen-solve did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("no interior patches left after removing the boundary margin")]
    NoInteriorPatches,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("unsupported moment order {0} (supported: 1, 2, 3)")]
    UnsupportedOrder(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("subsampling {count} patches every {m} leaves nothing")]
    SubsampleEmpty { count: usize, m: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("Gauss-Newton hit the iteration cap ({iterations}) with residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian rank {rank} < {dim} at a non-exact fit")]
    IllConditioned { rank: usize, dim: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_gap_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

pub(crate) fn check_activity(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}
