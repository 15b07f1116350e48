//! A laboratory for automatic differentiation over a small functional
//! language with delimited control.

pub mod error;
pub mod forward;
pub mod gradcheck;
pub mod lang;
pub mod reverse;
pub mod runtime;
pub mod staging;

pub use error::{Error, TransformError};
pub use gradcheck::{CheckConfig, CorpusSpec, GradReport, Mode, Step};
pub use lang::{
    anf, desugar, eval, freshen, parse, prepare, pretty, Env, EvalError, Expr, ParseError, Store,
    Value,
};
pub use reverse::ReverseVariant;
pub use staging::{IrError, IrProgram, Tree};
