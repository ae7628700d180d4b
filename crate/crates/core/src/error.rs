use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} requires a {expected}D grid, got {got}D")]
    UnsupportedDimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("blow-up at t = {t}: max |psi| = {max_abs}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("found {found} vortex candidates, expected {expected}")]
    VortexLost { found: usize, expected: usize },
}
