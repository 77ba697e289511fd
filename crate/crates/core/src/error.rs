use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("regions {first} and {second} overlap with positive area")]
    GeometryOverlap { first: String, second: String },

    #[error("mesh resolution: {0}")]
    MeshResolution(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid material data: {0}")]
    Validation(String),

    #[error("element {element} has non-positive weight {value}")]
    NonPositiveWeight { element: usize, value: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Newton iteration diverged at step {iteration} (residual {residual:e})")]
    NewtonDiverged { iteration: usize, residual: f64 },

    #[error("field size mismatch: expected {expected} elements, got {actual}")]
    MeshMismatch { expected: usize, actual: usize },

    #[error("mesh has no {0} elements")]
    EmptyRegion(&'static str),

    #[error("reference quantity is degenerate: {0}")]
    ReferenceDegenerate(String),

    #[error("cannot fit slope: {0}")]
    DegenerateFit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
