use thiserror::Error;

/// Crate-wide error type. Numeric payloads are carried as `f64` regardless of
/// the scalar the computation ran in; errors are terminal and only displayed.
#[derive(Debug, Error)]
pub enum Error {
    /// Netlist failed validation. Each entry names the offending node,
    /// element, or port and the rule it broke.
    #[error("invalid netlist:\n{}", .0.join("\n"))]
    InvalidNetlist(Vec<String>),

    #[error("no node named '{0}' in netlist")]
    UnknownNode(String),

    #[error("no element labeled '{0}' in netlist")]
    UnknownElement(String),

    #[error("no port labeled '{0}' in netlist")]
    UnknownPort(String),

    /// The nodal matrix is singular at this frequency: a lossless resonance
    /// was hit exactly. Reported as a tagged pole, never a NaN.
    #[error("admittance pole at {f_hz:.6e} Hz: {detail}")]
    Pole { f_hz: f64, detail: String },

    /// A domain precondition was violated (non-positive value, empty input,
    /// out-of-range argument, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Re[Y] <= 0 where a quality factor was requested.
    #[error("quality factor undefined at {f_hz:.6e} Hz: Re[Y] = {re_y:.3e} <= 0")]
    UndefinedQ { f_hz: f64, re_y: f64 },

    /// Every grid point of a response was lossless; nothing to normalize.
    #[error("curve has no dissipative response anywhere on the grid")]
    AllLossless,

    /// The curve has no usable passband (flat, or minimum at the grid edge).
    #[error("no passband found: {0}")]
    NoPassband(String),

    #[error("eigenmode analysis failed: {0}")]
    Eigen(String),

    /// Filter calibration could not meet its target; `achieved` is the best
    /// loaded Q reached before giving up.
    #[error("filter calibration failed: {message} (achieved Q = {achieved:?})")]
    Calibration {
        message: String,
        achieved: Option<f64>,
    },

    /// No identifiable resonance dip in a reflection trace.
    #[error("no identifiable resonance dip in trace '{0}'")]
    NoResonance(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("touchstone error at line {line}: {message}")]
    Touchstone { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
