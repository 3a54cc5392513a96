use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile `{profile}`: expected {expected} {unit}, got {got}")]
    LengthMismatch {
        profile: String,
        unit: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid profile `{id}`: {reason}")]
    InvalidProfile { id: String, reason: String },

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("unknown lookup table `{0}`")]
    UnknownTable(String),

    #[error("frame is empty")]
    EmptyFrame,

    #[error("window for `{profile}` needs {expected} frames, got {got}")]
    WindowSize {
        profile: String,
        expected: usize,
        got: usize,
    },

    #[error("table `{table}` row {row}: {reason}")]
    TableRow {
        table: String,
        row: usize,
        reason: String,
    },

    #[error("profile config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },

    #[error("repository line {line}: {reason}")]
    Repository { line: usize, reason: String },

    #[error("no profile selected")]
    NoProfileSelected,

    #[error(
        "target BER {target} unreachable: nearest value_x {nearest_value_x} gives {achieved} (residual {residual})"
    )]
    Unreachable {
        target: f64,
        nearest_value_x: f64,
        achieved: f64,
        residual: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
