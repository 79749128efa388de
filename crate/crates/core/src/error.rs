use std::path::PathBuf;

use crate::determinants::Determinant;
use crate::eigensolver::EigenResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integral index out of range: {0}")]
    IntegralIndex(String),

    #[error("sector holds {available} determinants but {requested} were requested")]
    SectorTooSmall { available: u128, requested: usize },

    #[error("sector size {count} exceeds the enumeration cap of {cap}")]
    SectorCap { count: u128, cap: u128 },

    #[error("duplicate determinant {0} in determinant list")]
    DuplicateDeterminant(Determinant),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coefficient vector norm {0} deviates from 1")]
    NotNormalized(f64),

    #[error("Davidson did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<EigenResult>,
    },

    #[error("near-degenerate PT2 denominator {denominator:.3e} for determinant {det}")]
    NearDegenerate { det: Determinant, denominator: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} ensemble runs failed")]
    EnsembleFailed(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
