use thiserror::Error;

/// Errors produced by model construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0}, need n >= 3")]
    UnsupportedDimension(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("radius margin violated: a_eps = {a_eps} must be < eps/8 = {bound} (eps = {eps}, c0 = {c0})")]
    RadiusMargin { a_eps: f64, bound: f64, eps: f64, c0: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{op} did not converge after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    NonConvergence { op: &'static str, iterations: usize, residual: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
