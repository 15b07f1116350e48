//! Reference executor for the IR.

use super::ir::*;
use super::tree::Tree;
use super::IrError;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

pub const DEFAULT_DEPTH_LIMIT: usize = 100_000;

/// Native stack reserved per nested IR call.
const STACK_PER_CALL: usize = 16 * 1024;

#[derive(Clone, Debug)]
enum RVal<'p> {
    Real(f64),
    Cell(usize),
    Kont(Rc<(&'p str, Vec<RVal<'p>>)>),
    Tree(Arc<Tree>),
}

/// A run-time input to the entry function.
#[derive(Clone, Debug)]
pub enum Input {
    Real(f64),
    Tree(Tree),
}

struct Interp<'p> {
    funcs: HashMap<&'p str, &'p IrFunction>,
    heap: Vec<f64>,
    depth: usize,
    limit: usize,
}

type Frame<'p> = HashMap<&'p str, RVal<'p>>;

fn malformed(msg: impl Into<String>) -> IrError {
    IrError::Malformed(msg.into())
}

impl<'p> Interp<'p> {
    fn operand(&self, o: &Operand, frame: &Frame<'p>) -> Result<f64, IrError> {
        match o {
            Operand::Lit(v) => Ok(*v),
            Operand::Sym(s) => match frame.get(s.as_str()) {
                Some(RVal::Real(v)) => Ok(*v),
                Some(_) => Err(malformed(format!("{s} is not a number"))),
                None => Err(malformed(format!("{s} is undefined"))),
            },
        }
    }

    fn get(&self, s: &str, frame: &Frame<'p>) -> Result<RVal<'p>, IrError> {
        frame
            .get(s)
            .cloned()
            .ok_or_else(|| malformed(format!("{s} is undefined")))
    }

    fn cell(&self, s: &str, frame: &Frame<'p>) -> Result<usize, IrError> {
        match frame.get(s) {
            Some(RVal::Cell(c)) => Ok(*c),
            _ => Err(malformed(format!("{s} is not a cell"))),
        }
    }

    fn arg(&self, a: &Arg, frame: &Frame<'p>) -> Result<RVal<'p>, IrError> {
        match a {
            Arg::Val(o) => Ok(RVal::Real(self.operand(o, frame)?)),
            Arg::Cell(s) => Ok(RVal::Cell(self.cell(s, frame)?)),
            Arg::Kont(s) | Arg::Tree(s) => self.get(s, frame),
        }
    }

    fn call(&mut self, name: &str, args: Vec<RVal<'p>>) -> Result<Option<f64>, IrError> {
        let f = *self
            .funcs
            .get(name)
            .ok_or_else(|| malformed(format!("no function {name}")))?;
        if f.params.len() != args.len() {
            return Err(malformed(format!(
                "{name} takes {} arguments, given {}",
                f.params.len(),
                args.len()
            )));
        }
        self.depth += 1;
        if self.depth > self.limit {
            return Err(IrError::DepthExceeded(self.limit));
        }
        let mut frame: Frame<'p> = HashMap::new();
        for (p, a) in f.params.iter().zip(args) {
            let ok = matches!(
                (p.kind, &a),
                (Kind::Val, RVal::Real(_))
                    | (Kind::Cell, RVal::Cell(_))
                    | (Kind::Kont, RVal::Kont(_))
                    | (Kind::Tree, RVal::Tree(_))
            );
            if !ok {
                return Err(malformed(format!(
                    "argument {} of {name} has the wrong kind",
                    p.sym
                )));
            }
            frame.insert(p.sym.as_str(), a);
        }
        let r = self.block(&f.body, &mut frame);
        self.depth -= 1;
        r
    }

    fn block(
        &mut self,
        block: &'p [IrStmt],
        frame: &mut Frame<'p>,
    ) -> Result<Option<f64>, IrError> {
        for s in block {
            match s {
                IrStmt::Bind { sym, op, lhs, rhs } => {
                    let v = op.apply(self.operand(lhs, frame)?, self.operand(rhs, frame)?);
                    frame.insert(sym, RVal::Real(v));
                }
                IrStmt::CellNew { sym, init } => {
                    let v = self.operand(init, frame)?;
                    self.heap.push(v);
                    frame.insert(sym, RVal::Cell(self.heap.len() - 1));
                }
                IrStmt::CellRead { sym, cell } => {
                    let v = self.heap[self.cell(cell, frame)?];
                    frame.insert(sym, RVal::Real(v));
                }
                IrStmt::CellAccum { cell, value } => {
                    let c = self.cell(cell, frame)?;
                    let v = self.operand(value, frame)?;
                    self.heap[c] += v;
                }
                IrStmt::CellSet { cell, value } => {
                    let c = self.cell(cell, frame)?;
                    self.heap[c] = self.operand(value, frame)?;
                }
                IrStmt::Call { callee, args } => {
                    let mut vals = args
                        .iter()
                        .map(|a| self.arg(a, frame))
                        .collect::<Result<Vec<_>, _>>()?;
                    let name = match callee {
                        Callee::Fn(n) => n.as_str(),
                        Callee::Kont(k) => match self.get(k, frame)? {
                            RVal::Kont(kv) => {
                                vals.extend(kv.1.iter().cloned());
                                kv.0
                            }
                            _ => return Err(malformed(format!("{k} is not a continuation"))),
                        },
                    };
                    self.call(name, vals)?;
                }
                IrStmt::MakeKont {
                    sym,
                    func,
                    captures,
                } => {
                    let caps = captures
                        .iter()
                        .map(|a| self.arg(a, frame))
                        .collect::<Result<Vec<_>, _>>()?;
                    frame.insert(sym, RVal::Kont(Rc::new((func.as_str(), caps))));
                }
                IrStmt::TreeCase {
                    tree,
                    value,
                    left,
                    right,
                    node,
                    leaf,
                } => {
                    let RVal::Tree(t) = self.get(tree, frame)? else {
                        return Err(malformed(format!("{tree} is not a tree")));
                    };
                    let r = match &*t {
                        Tree::Leaf => self.block(leaf, frame)?,
                        Tree::Node(v, l, r) => {
                            frame.insert(value, RVal::Real(*v));
                            frame.insert(left, RVal::Tree(l.clone()));
                            frame.insert(right, RVal::Tree(r.clone()));
                            self.block(node, frame)?
                        }
                    };
                    if r.is_some() {
                        return Ok(r);
                    }
                }
                IrStmt::Cond {
                    guard,
                    then_,
                    else_,
                } => {
                    let g = self.operand(guard, frame)?;
                    let r = if g != 0.0 {
                        self.block(then_, frame)?
                    } else {
                        self.block(else_, frame)?
                    };
                    if r.is_some() {
                        return Ok(r);
                    }
                }
                IrStmt::Return(o) => return Ok(Some(self.operand(o, frame)?)),
            }
        }
        Ok(None)
    }
}

/// Runs the entry function on `inputs` with at most `limit` nested calls.
pub fn ir_eval_inputs(p: &IrProgram, inputs: &[Input], limit: usize) -> Result<f64, IrError> {
    let stack = (limit.saturating_add(64))
        .saturating_mul(STACK_PER_CALL)
        .min(1 << 34);
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(stack)
            .spawn_scoped(s, || run(p, inputs, limit))
            .map_err(|e| malformed(format!("cannot start executor: {e}")))?
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

fn run(p: &IrProgram, inputs: &[Input], limit: usize) -> Result<f64, IrError> {
    let mut funcs = HashMap::new();
    for f in p.all_functions() {
        if funcs.insert(f.name.as_str(), f).is_some() {
            return Err(malformed(format!("duplicate function {}", f.name)));
        }
    }
    let mut it = Interp {
        funcs,
        heap: Vec::new(),
        depth: 0,
        limit,
    };
    let args = inputs
        .iter()
        .map(|i| match i {
            Input::Real(v) => RVal::Real(*v),
            Input::Tree(t) => RVal::Tree(Arc::new(t.clone())),
        })
        .collect();
    it.call(&p.entry.name, args)?
        .ok_or_else(|| malformed("entry returned no value"))
}

/// Runs a program whose entry takes one real.
pub fn ir_eval(p: &IrProgram, x0: f64) -> Result<f64, IrError> {
    ir_eval_inputs(p, &[Input::Real(x0)], DEFAULT_DEPTH_LIMIT)
}

pub fn ir_eval_with_limit(p: &IrProgram, x0: f64, limit: usize) -> Result<f64, IrError> {
    ir_eval_inputs(p, &[Input::Real(x0)], limit)
}

/// Runs a staged tree fold.
pub fn ir_eval_tree(p: &IrProgram, tree: &Tree, x0: f64) -> Result<f64, IrError> {
    ir_eval_inputs(
        p,
        &[Input::Tree(tree.clone()), Input::Real(x0)],
        DEFAULT_DEPTH_LIMIT,
    )
}
