use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular model: {0}")]
    SingularModel(String),

    /// A scatterer with zero transmission has no transfer matrix.
    #[error("singular scatterer: qubit {qubit} has t = 1 + r = 0 at omega = {omega:.6e} rad/s")]
    SingularScatterer { qubit: usize, omega: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("division guard: background vanishes at grid index {index}")]
    DivisionGuard { index: usize },

    #[error("insufficient stencil: {0}")]
    InsufficientStencil(String),

    #[error("phase unwrap ambiguous between samples {index} and {next}: step {step:.3} rad, refine the grid", next = .index + 1)]
    Resolution { index: usize, step: f64 },

    #[error("structure not found: {0}")]
    StructureNotFound(String),

    #[error("fit failed after {iterations} iterations: {reason} (best cost {cost:.3e}, params {best:?})")]
    FitFailure {
        reason: String,
        best: Vec<f64>,
        cost: f64,
        iterations: usize,
    },

    #[error("window too short: {0}")]
    Truncation(String),

    #[error("spectrum coverage: {0}")]
    Coverage(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}
