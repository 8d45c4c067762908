use thiserror::Error;

use crate::multilevel::SolveReport;
use crate::nodeset::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("size error: {what} (requested {requested}, available {available})")]
    Size {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{} coarse node(s) not present in the fine set (first: {:?})", missing.len(), &missing[..missing.len().min(8)])]
    Collocation { missing: Vec<usize> },

    #[error("ill-conditioned stencil system at ({:.6e}, {:.6e}){}: rcond estimate {rcond:.3e}", point[0], point[1], row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Conditioning {
        point: Point,
        row: Option<usize>,
        rcond: f64,
    },

    #[error("smoother failure: zero diagonal in row {row}")]
    Smoother { row: usize },

    #[error("multilevel iteration diverged after {} V-cycles", report.iterations)]
    Divergence { report: Box<SolveReport> },

    #[error("capacity error: {requested} nodes requested, limit is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("singular evaluation point ({:.3e}, {:.3e}): {reason}", point[0], point[1])]
    Singular { point: Point, reason: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Conditioning { .. } | Error::Smoother { .. } | Error::Divergence { .. } | Error::Singular { .. } => {
                2
            }
            Error::Io(_) | Error::Parse { .. } | Error::Json(_) => 3,
            _ => 1,
        }
    }
}
