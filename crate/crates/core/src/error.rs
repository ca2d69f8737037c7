use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("csv row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("required column absent: {0}")]
    MissingColumn(String),

    #[error("day_id not strictly increasing by 1 at row {row} (day {day_id})")]
    NonMonotoneDay { row: usize, day_id: i64 },

    #[error("negative count in column {column} at day {day_id}")]
    NegativeCount { column: String, day_id: i64 },

    #[error("cumulative series decreases at index {index}")]
    NotMonotone { index: usize },

    #[error("negative increment at index {index}")]
    NegativeIncrement { index: usize },

    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("window [{start}, {start} + {n}) is outside the rate series")]
    WindowOutOfRange { start: i64, n: usize },

    #[error("no defined rate in window starting at day {start} (n = {n})")]
    EmptyWindow { start: i64, n: usize },

    #[error("knot {knot} is not strictly inside the data range [{lo}, {hi}]")]
    KnotOutOfRange { knot: f64, lo: f64, hi: f64 },

    #[error("knots must be strictly increasing (got {prev} then {next})")]
    KnotOrder { prev: f64, next: f64 },

    #[error("design has {rows} rows but {cols} basis columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("design matrix is rank deficient; dependent columns {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("observation {index} is interpolated exactly (leverage 1); LOOCV undefined")]
    InterpolatingPoint { index: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nothing to plot: {0}")]
    EmptyPlot(String),
}
