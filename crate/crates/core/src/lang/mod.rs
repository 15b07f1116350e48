//! The core language: syntax, reader, printer, desugaring, renaming, ANF and
//! the reference evaluator.

pub mod anf;
pub mod desugar;
pub mod eval;
pub mod expr;
pub mod fresh;
pub mod parse;
pub mod pretty;

pub use anf::{anf, is_anf, AnfError};
pub use desugar::{bool_value, desugar, prepare};
pub use eval::{apply_real, eval, eval_closed, Env, EvalError, Store, Value};
pub use expr::{Expr, Name};
pub use fresh::{alpha_eq, freshen, freshen_from, has_unique_binders, NameGen};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use pretty::pretty;
