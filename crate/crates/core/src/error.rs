use thiserror::Error;

/// Failure modes shared by every simulator and learner component.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical blow-up in wave solver at substep {step}")]
    NumericalBlowup { step: u64 },

    #[error("query ({x:.3}, {y:.3}) lies outside the grid extent")]
    Domain { x: f64, y: f64 },

    #[error("degenerate geometry for AUV {auv}: zero slant range")]
    DegenerateGeometry { auv: usize },

    #[error("simulation fault at step {step}: {what}")]
    SimulationFault { step: usize, what: String },

    #[error("training fault: {0}")]
    Training(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("incompatible checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
