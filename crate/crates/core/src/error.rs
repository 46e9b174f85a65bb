use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("non-finite potential value at node {index} {coords:?}")]
    NonFinitePotential { index: usize, coords: Vec<f64> },

    #[error("lambda {shift} too close to spectrum (pivot {pivot:e} at row {row}); perturb lambda")]
    NearSingular { shift: f64, pivot: f64, row: usize },

    #[error("solver: {0}")]
    Solver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infinite phase volume: sublevel set {{V < {lambda}}} is unbounded")]
    InfinitePhaseVolume { lambda: f64 },

    #[error("angular integral J(V) diverges; use the Solomyak or Simon predictions")]
    DivergentAngularIntegral,

    #[error("expression: {0}")]
    Expression(String),

    #[error("potential does not vanish to order {order} on the curve (relative residual {residual:e})")]
    VanishingOrder { order: usize, residual: f64 },

    #[error("gate: {0}")]
    Gate(String),

    #[error("truncation: {0}")]
    Truncation(String),
}

impl Error {
    /// Stable short code used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidAxis(_) => "E_AXIS",
            Error::DimensionCap { .. } => "E_DIM_CAP",
            Error::DimensionMismatch { .. } => "E_DIM",
            Error::NotSymmetric { .. } => "E_SYMMETRY",
            Error::NonFinitePotential { .. } => "E_POTENTIAL",
            Error::NearSingular { .. } => "E_ON_SPECTRUM",
            Error::Solver(_) => "E_SOLVER",
            Error::InvalidArgument(_) => "E_ARG",
            Error::InfinitePhaseVolume { .. } => "E_INFINITE_VOLUME",
            Error::DivergentAngularIntegral => "E_DIVERGENT",
            Error::Expression(_) => "E_EXPR",
            Error::VanishingOrder { .. } => "E_ORDER",
            Error::Gate(_) => "E_GATE",
            Error::Truncation(_) => "E_TRUNCATION",
        }
    }
}
