use thiserror::Error;

use crate::expr::{EvalError, FieldError, ParseError};
use crate::frame::GrowthVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("growth vector {growth} at {point:?}; (2,3,5) required")]
    GrowthVector { point: Vec<f64>, growth: GrowthVector },
    #[error("chart pole: {0}")]
    ChartPole(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("quadric fit is not unique: singular values {profile:?}")]
    FitDegenerate { profile: Vec<f64> },
    #[error("jet order {available} is too short; {needed} required")]
    JetOrder { needed: usize, available: usize },
    #[error("curve is not regular: {0}")]
    Irregular(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
