use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {0} of the encode matrix is all zero")]
    DegenerateRow(usize),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix entry {value} at ({row}, {col}) exceeds weight bound {bound}")]
    WeightBound {
        row: usize,
        col: usize,
        value: i64,
        bound: i64,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("scheme is not decodable: R*T is not monomial")]
    NotDecodable,

    #[error("enumeration needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("differential signaling needs an even wire count, got {0}")]
    OddDifferential(usize),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("response still {level:.3e} above floor {floor:.3e} at the end of a {window}-symbol window; extend the window")]
    ExtendWindow { window: usize, level: f64, floor: f64 },

    #[error("network matrix is singular or ill-conditioned at f = {0} Hz")]
    IllConditioned(f64),

    #[error("malformed response file: {0}")]
    MalformedResponse(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-uniform time grid at row {0}")]
    NonUniformGrid(usize),

    #[error("PRBS seed must be nonzero")]
    ZeroSeed,

    #[error("stream of {got} symbols is shorter than the channel memory of {need} symbols")]
    StreamTooShort { got: usize, need: usize },

    #[error("supply droop is data dependent; use the stream eye method")]
    NonlinearSupply,

    #[error("no candidate rows satisfy the search constraints: {0}")]
    InfeasibleRows(String),

    #[error("no decoder exists for lane {lane}: {reason}")]
    InfeasibleDecoder { lane: usize, reason: String },

    #[error("eye mask is not met even at the minimum symbol rate: {0}")]
    MaskUnsatisfiable(String),

    #[error("empty design space: {0}")]
    EmptySpace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// The inputs are valid but no design satisfies the constraints.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleRows(_) | Error::InfeasibleDecoder { .. } | Error::MaskUnsatisfiable(_) | Error::NotDecodable
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
