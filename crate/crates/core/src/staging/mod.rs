//! Staged reverse mode: gradient programs reified as IR at translation
//! time, then optimized, executed, or printed as C-like text.

pub mod emit;
pub mod exec;
pub mod ir;
pub mod optimize;
pub mod stage;
pub mod tree;

pub use emit::emit_c;
pub use exec::{
    ir_eval, ir_eval_inputs, ir_eval_tree, ir_eval_with_limit, Input, DEFAULT_DEPTH_LIMIT,
};
pub use ir::{Arg, Callee, IrFunction, IrOp, IrProgram, IrStmt, Kind, Operand, Param, Sym};
pub use optimize::ir_optimize;
pub use stage::stage_reverse;
pub use tree::{stage_tree, tree_program, Tree};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IrError {
    #[error("'{0}' cannot be staged")]
    Unsupported(&'static str),
    #[error("unbound variable '{0}'")]
    Unbound(String),
    #[error("expected a number, found a {0}")]
    NotANumber(&'static str),
    #[error("expected a boolean guard, found a {0}")]
    NotABool(&'static str),
    #[error("expected a pair, found a {0}")]
    NotAPair(&'static str),
    #[error("expected a function, found a {0}")]
    NotAFunction(&'static str),
    #[error("expected a lambda: {0}")]
    NotLambda(&'static str),
    #[error("more than {0} static applications; the program may not terminate")]
    InlineLimit(usize),
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
    #[error("malformed IR: {0}")]
    Malformed(String),
    #[error("malformed tree: {0}")]
    BadTree(String),
}

/// True if every call `f` makes to itself is followed, within its block
/// and the enclosing blocks, only by adjoint bookkeeping: reads, binds,
/// and cell updates.
pub fn self_calls_in_tail(f: &IrFunction) -> bool {
    fn epilogue(s: &IrStmt) -> bool {
        matches!(
            s,
            IrStmt::Bind { .. }
                | IrStmt::CellRead { .. }
                | IrStmt::CellAccum { .. }
                | IrStmt::CellSet { .. }
        )
    }
    fn calls_self(name: &str, b: &[IrStmt]) -> bool {
        let mut found = false;
        ir::walk(
            b,
            &mut |s| found |= matches!(s, IrStmt::Call { callee: Callee::Fn(n), .. } if n == name),
        );
        found
    }
    fn check(name: &str, b: &[IrStmt]) -> bool {
        b.iter().enumerate().all(|(i, s)| {
            let tail = b[i + 1..].iter().all(epilogue);
            match s {
                IrStmt::Call {
                    callee: Callee::Fn(n),
                    ..
                } if n == name => tail,
                _ if s.blocks().is_empty() => true,
                _ if tail => s.blocks().iter().all(|sub| check(name, sub)),
                _ => s.blocks().iter().all(|sub| !calls_self(name, sub)),
            }
        })
    }
    check(&f.name, &f.body)
}

/// Number of statements in the program that set an adjoint to exactly
/// `1.0`, the seeding step every staged gradient ends its forward pass
/// with.
pub fn seed_count(p: &IrProgram) -> usize {
    p.count(&|s| matches!(s, IrStmt::CellSet { value: Operand::Lit(v), .. } if *v == 1.0))
}
