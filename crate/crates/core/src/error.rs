use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A system, scheme or grid parameter is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The number of bits handed to the mapper does not match the frame size.
    #[error("framing error: expected {expected} bits, got {got}")]
    Framing { expected: usize, got: usize },

    /// No closed-form energy table exists for this pair of schemes.
    #[error("no closed-form energy terms for {0}-{1}; use brute-force enumeration")]
    UnsupportedClosedForm(String, String),

    /// The receive constellation is not uniquely decodable at this angle.
    #[error("detector undefined: receive constellation is not unique at theta = {theta_deg} deg")]
    DetectorUndefined { theta_deg: f64 },

    /// The requested expectation diverges.
    #[error("undefined expectation: {0}")]
    UndefinedExpectation(String),

    /// Not enough usable BER points to fit a slope.
    #[error("diversity estimation failed: {0}")]
    Estimation(String),

    /// Channel draw kept failing the conditioning guard.
    #[error("channel draw failed: {0}")]
    Channel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
