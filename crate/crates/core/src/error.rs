use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cell: no probability mass on [{left}, {right}]")]
    EmptyCell { left: f64, right: f64 },

    #[error("moment overflow: order {p} moment is not finite for this law (moments exist below order {order})")]
    MomentOverflow { p: f64, order: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown distribution `{name}`; available: {catalogue}")]
    UnknownDistribution { name: String, catalogue: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quantizer has no points")]
    EmptyQuantizer,

    #[error("duplicate point at index {index}")]
    DuplicatePoint { index: usize },

    #[error("no convergence after {iters} iterations (last iterate {last}, residual {residual:e})")]
    NoConvergence { last: f64, residual: f64, iters: usize },

    #[error("curvature loss: rho({a}) = {rho}")]
    CurvatureLoss { a: f64, rho: f64 },

    #[error("empty Voronoi cell on {attempts} consecutive sweeps")]
    RepeatedEmptyCell { attempts: usize },

    #[error("level {level}: {source}")]
    LevelFailed {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("distribution is not symmetric about 0")]
    NotSymmetric,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point {0} lies outside [0, 1]")]
    OutsideUnitInterval(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Error {
        Error::LevelFailed { level, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
