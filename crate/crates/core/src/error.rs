use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("metric is singular at {point:?} (condition number {condition:e})")]
    SingularMetric { point: Vec<f64>, condition: f64 },
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("no boundary face designated")]
    NoBoundaryFace,
    #[error("degenerate boundary face: {0}")]
    DegenerateFace(String),
    #[error("scalar curvature is not constant: {0}")]
    NonConstantScalarCurvature(String),
    #[error("potential is not positive at {point:?} (value {value:e})")]
    NonPositivePotential { point: Vec<f64>, value: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("decay is undefined on a bounded domain")]
    BoundedDomain,
    #[error("tail of the flux scan does not converge: {0}")]
    NonConvergentTail(String),
    #[error("ODE integration failed: {0}")]
    StepFailure(String),
    #[error("prerequisite not met: {0}")]
    Prerequisite(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
