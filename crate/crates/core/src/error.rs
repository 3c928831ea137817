use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::moments::MomentError;
use crate::oracle::OracleError;
use crate::poly::PolyError;
use crate::problem::ProblemError;
use crate::relax::RelaxError;
use crate::sets::SetError;

/// Umbrella error for callers that do not care which layer failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
