use std::path::PathBuf;

use crate::mesh::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path} at line {line}: {msg}")]
    Malformed { path: PathBuf, line: usize, msg: String },

    #[error("mesh validation failed: {0}")]
    Validation(ValidationReport),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("singular {kind} element {index}: {msg}")]
    SingularElement {
        kind: &'static str,
        index: usize,
        msg: String,
    },

    #[error("vertex {vertex} penetrates collider {collider} (distance {distance:e})")]
    Penetration {
        vertex: usize,
        collider: usize,
        distance: f64,
    },

    #[error("newton solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("loss evaluation failed for {label} at (rho={rho}, kappa_s={kappa_s}, kappa_b={kappa_b}): {source}")]
    Evaluation {
        label: &'static str,
        rho: f64,
        kappa_s: f64,
        kappa_b: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("connected component containing vertices {vertices:?} has no matched vertex")]
    UnconstrainedRegion { vertices: Vec<usize> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the frame it occurred in.
    pub fn at_frame(self, frame: usize) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Malformed { .. } => "malformed",
            Error::Validation(_) => "validation",
            Error::Invalid(_) => "invalid",
            Error::SingularElement { .. } => "singular_element",
            Error::Penetration { .. } => "penetration",
            Error::Solver { .. } => "solver",
            Error::Numeric(_) => "numeric",
            Error::Frame { source, .. } => source.kind(),
            Error::Evaluation { source, .. } => source.kind(),
            Error::UnconstrainedRegion { .. } => "unconstrained_region",
        }
    }
}
