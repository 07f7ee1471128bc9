use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("barycentres differ: mu has {mu}, nu has {nu}")]
    BarycenterMismatch { mu: String, nu: String },

    #[error("subspaces do not complement R^{ambient}: dim V1 = {dim1}, dim V2 = {dim2}")]
    SubspacesNotComplementing { dim1: usize, dim2: usize, ambient: usize },

    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("program has {nonzeros} nonzeros, above the rational-mode limit of {limit}; rerun in float mode")]
    ProblemTooLarge { nonzeros: usize, limit: usize },

    #[error("the z grid is empty")]
    EmptyGrid,

    #[error("no feasible plan on a grid of {grid_size} points; enlarge the z grid")]
    GridInfeasible { grid_size: usize },

    #[error("coupling is not bimartingale at atom {atom}: residual {residual}")]
    ResidualViolation { atom: String, residual: String },

    #[error("leaf {path} (key {key}) violates the {kind} balance")]
    LeafImbalance { path: String, key: String, kind: &'static str },

    #[error("leaf {path} (key {key}) admits no bimartingale coupling")]
    LeafInfeasible { path: String, key: String },

    #[error("expected dimension {expected}, found {found}")]
    UnsupportedDimension { expected: usize, found: usize },
}

impl Error {
    /// Errors caused by the input rather than by the solver itself.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::MalformedProgram(_))
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
