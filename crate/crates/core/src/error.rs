use thiserror::Error;

/// Errors produced by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Young-type product needs `gamma + delta > 0` and `delta < 0`.
    #[error("product condition violated: gamma = {gamma}, delta = {delta} (need gamma + delta > 0 and delta < 0)")]
    ProductCondition { gamma: f64, delta: f64 },

    #[error("parameters outside the admissible window: {0}")]
    Parameters(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("Picard iteration did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("norm {norm:e} exceeded ceiling {ceiling:e} at t = {time} (iteration {iteration})")]
    NormExplosion {
        iteration: usize,
        time: f64,
        norm: f64,
        ceiling: f64,
    },

    #[error("finite-difference step {step} grew the sup-norm by a factor {factor:.3} (limit {limit})")]
    Instability { step: usize, factor: f64, limit: f64 },

    #[error("amplitude guard: {0}")]
    AmplitudeGuard(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
