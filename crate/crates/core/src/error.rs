//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! grouped by the stage that raises them: matrix plumbing (shape, partition,
//! parse), gradient-code construction, scheme configuration, decoding, and
//! simulation. Messages are written so a failing CLI run can be diagnosed
//! without a debugger.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands do not have compatible dimensions.
    #[error("shape mismatch in {context}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    Shape {
        context: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A matrix dimension is not divisible by the requested block count.
    #[error("cannot split {axis} of length {len} into {parts} equal blocks")]
    Partition {
        axis: &'static str,
        len: usize,
        parts: usize,
    },

    /// A scalar or structural argument is out of its documented range.
    #[error("invalid {name}: {message}")]
    Parameter { name: &'static str, message: String },

    /// A text input (Matrix Market file, config file, serialized table)
    /// could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Underlying I/O failure while reading or writing a file.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// The requested worker count cannot meet the scheme's minimum.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// No valid gradient-coding matrix was found within the retry budget.
    #[error(
        "gradient-code construction failed for eta={eta}, kappa={kappa} after {attempts} attempts \
         (worst offending row subset {subset:?}, residual {residual:.3e})"
    )]
    GcConstruction {
        eta: usize,
        kappa: usize,
        attempts: usize,
        subset: Vec<usize>,
        residual: f64,
    },

    /// A combine vector failed to reproduce the all-ones row within tolerance.
    #[error(
        "combine residual {residual:.3e} exceeds {tolerance:.1e} for survivor set {survivors:?}"
    )]
    SpanViolation {
        survivors: Vec<usize>,
        residual: f64,
        tolerance: f64,
    },

    /// A worker group has too few survivors to be combined.
    #[error("group {group} has {got} survivors but needs at least {need}")]
    InsufficientGroup {
        group: usize,
        got: usize,
        need: usize,
    },

    /// Too few group evaluations survive to interpolate the decoding polynomial.
    #[error("decoding needs {need} group evaluations but only {got} qualify")]
    InsufficientPoints { got: usize, need: usize },

    /// Evaluation points are duplicated or the interpolation system is singular.
    #[error("bad evaluation-point configuration: {0}")]
    Configuration(String),

    /// A brute-force oracle was asked for more work than its guard allows.
    #[error("oracle size guard exceeded: {0}")]
    OracleGuard(String),

    /// The split baseline only applies when `delta_p` divides `kp`.
    #[error("split scheme requires delta_p | kp (got delta_p={delta_p}, kp={kp})")]
    SplitInapplicable { delta_p: usize, kp: usize },

    /// Every worker finished yet no prefix of arrivals was decodable.
    #[error("no decodable prefix: all {n_workers} workers finished without reaching the threshold")]
    InfeasibleRun { n_workers: usize },

    /// Normalized error is undefined against a zero reference.
    #[error("reference matrix has zero Frobenius norm; normalized error undefined")]
    ZeroReference,
}
