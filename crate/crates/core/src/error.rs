use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry, measure and approximation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} outside sampled range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("graph is disconnected: no path between {0} and {1}")]
    Disconnected(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("size {size} exceeds cap {cap}")]
    Size { size: usize, cap: usize },

    #[error("index {index} out of range for {len} points")]
    Index { index: usize, len: usize },

    #[error("matrix is not SPD: eigenvalue {eigenvalue:e}")]
    Spectral { eigenvalue: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("trajectory diverged at t={time}: |y|={norm:e}")]
    Divergence { time: f64, norm: f64 },

    #[error("truncation family saturated at rank {max_rank}; best error {best:e}")]
    Saturation { max_rank: usize, best: f64 },

    #[error("point is outside part {part}")]
    Part { part: usize },

    #[error("cover violation in piece {piece}: d_G({u},{v})={global} but d_piece={local}")]
    Cover {
        piece: usize,
        u: usize,
        v: usize,
        global: f64,
        local: f64,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
