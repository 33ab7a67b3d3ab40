use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // data ingestion and standardization
    #[error("column `{0}` is constant and cannot be standardized")]
    ConstantColumn(String),
    #[error("missing value at row {row}, column {col} while imputation is disabled")]
    MissingValueWithImputeOff { row: usize, col: usize },
    #[error("column `{0}` has no observed values")]
    AllMissingColumn(String),
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("moments require standardized data")]
    NotStandardized,

    // linear algebra
    #[error("covariance matrix is singular (condition number {condition:.3e} exceeds {cap:.1e})")]
    SingularCovariance { condition: f64, cap: f64 },
    #[error("active block of size {size} is numerically singular")]
    SingularActiveBlock { size: usize },
    #[error("active-set solver did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    // penalties
    #[error("penalty regime requires an initial estimate")]
    MissingInit,
    #[error("penalty regime requires a node classification")]
    MissingClassification,
    #[error("global penalty level must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("invalid penalty parameter: {0}")]
    InvalidPenalty(String),
    #[error("all penalty weights are infinite")]
    AllInfinitePenalties,
    #[error("penalty path has no estimates")]
    EmptyPath,
    #[error("mixture fit is degenerate: all values are equal")]
    DegenerateInput,

    // simulation
    #[error("cannot place {k} distinct edges among {placeable} admissible pairs")]
    InfeasibleEdgeCount { k: usize, placeable: usize },
    #[error("true support block of column {0} is singular")]
    SingularSupportBlock(usize),
    #[error("no stationary coefficient draw found after {0} attempts")]
    NoStationaryDraw(usize),

    // file formats
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Strips column annotations added by `solve_network`.
    pub fn root(&self) -> &Error {
        match self {
            Error::Column { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_column(self, column: usize) -> Error {
        Error::Column {
            column,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
