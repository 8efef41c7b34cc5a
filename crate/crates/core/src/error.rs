use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("negative variance at index {index}")]
    NegativeVariance { index: usize },
    #[error("neighbor offset {offset} exceeds supported radius {max}")]
    OffsetTooLarge { offset: isize, max: usize },
    #[error("expected a {expected}D grid, got {found}D")]
    WrongDimension { expected: usize, found: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("evolution diverged at t = {t} (index {index})")]
    Divergence { index: usize, t: f64 },
    #[error("unknown builtin right-hand side `{0}`")]
    UnknownBuiltin(String),
    #[error("site {0} is not mapped to a mode")]
    SiteOutOfRange(usize),
    #[error("Fock dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("Kraus completeness violated: residual {0:e}")]
    Completeness(f64),
    #[error("residual I - K^dag K is indefinite: eigenvalue {0:e}")]
    Indefinite(f64),
    #[error("completion is not unitary: residual {0:e}")]
    NonUnitary(f64),
    #[error("stencil radius {radius} infeasible for derivative order {order} (need >= {min})")]
    InfeasibleStencil { order: usize, radius: usize, min: usize },
    #[error("need at least {needed} distinct sample points, got {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("duplicate loss rate {0}")]
    DuplicateRate(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("no snapshot saved at t = {0}")]
    MissingSnapshot(f64),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("channel verification failed: {0}")]
    Verification(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
