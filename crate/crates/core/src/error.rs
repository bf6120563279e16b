use thiserror::Error;

use crate::solvers::SolveReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid point count {0} must be even and at least 4")]
    BadSize(usize),
    #[error("domain extent {0} must be positive and finite")]
    BadExtent(f64),
    #[error("field has {found} values, grid expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("vector components live on different grids")]
    ComponentMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid model parameter {name} = {value}: {reason}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("vector length {found} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("linear solve did not converge: {0}")]
    NotConverged(SolveReport),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("this scheme needs two history levels; take a bootstrap step first")]
    MissingHistory,
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error("step failed at dt = {dt}: {source}")]
    Step { dt: f64, source: StepError },
}
