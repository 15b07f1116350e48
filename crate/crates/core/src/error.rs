use crate::lang::{AnfError, EvalError, ParseError};
use thiserror::Error;

/// Source forms a transformation cannot handle.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum TransformError {
    #[error(
        "source program contains '{0}'; differentiation requires a program without shift/reset"
    )]
    Control(&'static str),
    #[error("'{0}' is sugar; desugar first")]
    Sugar(&'static str),
    #[error("expected a one-argument lambda, found '{0}'")]
    NotLambda(&'static str),
    #[error("input is not in administrative normal form")]
    NotAnf,
    #[error("'{0}' is not supported here")]
    Unsupported(&'static str),
}

/// Rejects sugar and control forms, and returns the lambda's parts.
pub(crate) fn expect_lambda(f: &crate::Expr) -> Result<(&str, &crate::Expr), TransformError> {
    check_source(f)?;
    match f {
        crate::Expr::Lam(p, body) => Ok((p, body)),
        other => Err(TransformError::NotLambda(other.form_name())),
    }
}

pub(crate) fn check_source(e: &crate::Expr) -> Result<(), TransformError> {
    use crate::Expr::*;
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        match e {
            Shift(..) | Reset(_) => return Err(TransformError::Control(e.form_name())),
            If(..) | LetRec(..) | Seq(..) => return Err(TransformError::Sugar(e.form_name())),
            _ => stack.extend(e.children()),
        }
    }
    Ok(())
}

/// Umbrella error for the library entry points.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Anf(#[from] AnfError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Ir(#[from] crate::staging::IrError),
    #[error("unsupported for this mode: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("gradient descent diverged at step {step}: x = {x}")]
    Diverged { step: usize, x: f64 },
}
