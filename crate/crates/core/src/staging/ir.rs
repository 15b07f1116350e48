//! A first-order, ANF-style IR for staged gradient programs. Continuations
//! are named functions; adjoints travel as by-reference cell parameters.

use std::collections::BTreeSet;
use std::fmt;

pub type Sym = String;

#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Sym(Sym),
    Lit(f64),
}

impl Operand {
    pub fn sym(s: impl Into<Sym>) -> Operand {
        Operand::Sym(s.into())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Operand::Sym(s) => Some(s),
            Operand::Lit(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IrOp {
    Add,
    Mul,
    /// `1.0` if the left operand is greater, else `0.0`.
    Gt,
}

impl IrOp {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            IrOp::Add => a + b,
            IrOp::Mul => a * b,
            IrOp::Gt => {
                if a > b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            IrOp::Add => "+",
            IrOp::Mul => "*",
            IrOp::Gt => ">",
        }
    }
}

/// What a symbol denotes at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Val,
    Cell,
    Kont,
    Tree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub kind: Kind,
    pub sym: Sym,
}

impl Param {
    pub fn new(kind: Kind, sym: impl Into<Sym>) -> Param {
        Param {
            kind,
            sym: sym.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Val(Operand),
    Cell(Sym),
    Kont(Sym),
    Tree(Sym),
}

impl Arg {
    /// The argument that forwards symbol `sym` of kind `kind` unchanged.
    pub fn forward(kind: Kind, sym: &str) -> Arg {
        match kind {
            Kind::Val => Arg::Val(Operand::sym(sym)),
            Kind::Cell => Arg::Cell(sym.to_string()),
            Kind::Kont => Arg::Kont(sym.to_string()),
            Kind::Tree => Arg::Tree(sym.to_string()),
        }
    }

    pub fn sym(&self) -> Option<&str> {
        match self {
            Arg::Val(o) => o.as_sym(),
            Arg::Cell(s) | Arg::Kont(s) | Arg::Tree(s) => Some(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Callee {
    /// A named IR function.
    Fn(String),
    /// A continuation value built by `MakeKont`.
    Kont(Sym),
}

#[derive(Clone, Debug, PartialEq)]
pub enum IrStmt {
    Bind {
        sym: Sym,
        op: IrOp,
        lhs: Operand,
        rhs: Operand,
    },
    CellNew {
        sym: Sym,
        init: Operand,
    },
    CellRead {
        sym: Sym,
        cell: Sym,
    },
    /// `cell += value`
    CellAccum {
        cell: Sym,
        value: Operand,
    },
    CellSet {
        cell: Sym,
        value: Operand,
    },
    Call {
        callee: Callee,
        args: Vec<Arg>,
    },
    /// A continuation value: `func` with `captures` appended to the
    /// arguments of every call through it.
    MakeKont {
        sym: Sym,
        func: String,
        captures: Vec<Arg>,
    },
    TreeCase {
        tree: Sym,
        value: Sym,
        left: Sym,
        right: Sym,
        node: Vec<IrStmt>,
        leaf: Vec<IrStmt>,
    },
    Cond {
        guard: Operand,
        then_: Vec<IrStmt>,
        else_: Vec<IrStmt>,
    },
    Return(Operand),
}

impl IrStmt {
    /// Symbols this statement binds, not counting nested blocks.
    pub fn defs(&self) -> Vec<&str> {
        match self {
            IrStmt::Bind { sym, .. }
            | IrStmt::CellNew { sym, .. }
            | IrStmt::CellRead { sym, .. }
            | IrStmt::MakeKont { sym, .. } => vec![sym],
            IrStmt::TreeCase {
                value, left, right, ..
            } => vec![value, left, right],
            _ => vec![],
        }
    }

    /// Symbols this statement reads, not counting nested blocks.
    pub fn uses(&self) -> Vec<&str> {
        fn ops<'s>(os: &[&'s Operand]) -> Vec<&'s str> {
            os.iter().filter_map(|o| o.as_sym()).collect()
        }
        match self {
            IrStmt::Bind { lhs, rhs, .. } => ops(&[lhs, rhs]),
            IrStmt::CellNew { init, .. } => ops(&[init]),
            IrStmt::CellRead { cell, .. } => vec![cell],
            IrStmt::CellAccum { cell, value } | IrStmt::CellSet { cell, value } => {
                let mut v = vec![cell.as_str()];
                v.extend(value.as_sym());
                v
            }
            IrStmt::Call { callee, args } => {
                let mut v: Vec<&str> = args.iter().filter_map(Arg::sym).collect();
                if let Callee::Kont(k) = callee {
                    v.push(k);
                }
                v
            }
            IrStmt::MakeKont { captures, .. } => captures.iter().filter_map(Arg::sym).collect(),
            IrStmt::TreeCase { tree, .. } => vec![tree],
            IrStmt::Cond { guard, .. } => ops(&[guard]),
            IrStmt::Return(o) => ops(&[o]),
        }
    }

    pub fn blocks(&self) -> Vec<&Vec<IrStmt>> {
        match self {
            IrStmt::Cond { then_, else_, .. } => vec![then_, else_],
            IrStmt::TreeCase { node, leaf, .. } => vec![node, leaf],
            _ => vec![],
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Vec<IrStmt>> {
        match self {
            IrStmt::Cond { then_, else_, .. } => vec![then_, else_],
            IrStmt::TreeCase { node, leaf, .. } => vec![node, leaf],
            _ => vec![],
        }
    }

    pub fn is_cell_op(&self) -> bool {
        matches!(
            self,
            IrStmt::CellNew { .. }
                | IrStmt::CellRead { .. }
                | IrStmt::CellAccum { .. }
                | IrStmt::CellSet { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<IrStmt>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrProgram {
    pub functions: Vec<IrFunction>,
    pub entry: IrFunction,
}

/// Visits every statement of `block`, nested ones included, in order.
pub fn walk<'s>(block: &'s [IrStmt], f: &mut dyn FnMut(&'s IrStmt)) {
    for s in block {
        f(s);
        for b in s.blocks() {
            walk(b, f);
        }
    }
}

impl IrFunction {
    /// Symbols read in the body but neither bound there nor parameters.
    pub fn free_syms(&self) -> BTreeSet<Sym> {
        let mut used = BTreeSet::new();
        let mut defined: BTreeSet<&str> = self.params.iter().map(|p| p.sym.as_str()).collect();
        walk(&self.body, &mut |s| {
            used.extend(s.uses());
            defined.extend(s.defs());
        });
        used.into_iter()
            .filter(|u| !defined.contains(u))
            .map(str::to_string)
            .collect()
    }

    /// Names of the IR functions this body calls or closes over.
    pub fn callees(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        walk(&self.body, &mut |s| match s {
            IrStmt::Call {
                callee: Callee::Fn(f),
                ..
            } => {
                out.insert(f.as_str());
            }
            IrStmt::MakeKont { func, .. } => {
                out.insert(func.as_str());
            }
            _ => {}
        });
        out
    }
}

impl IrProgram {
    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        if self.entry.name == name {
            return Some(&self.entry);
        }
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn all_functions(&self) -> impl Iterator<Item = &IrFunction> {
        std::iter::once(&self.entry).chain(&self.functions)
    }

    pub fn stmt_count(&self) -> usize {
        self.count(&|_| true)
    }

    pub fn cell_op_count(&self) -> usize {
        self.count(&IrStmt::is_cell_op)
    }

    pub fn count(&self, pred: &dyn Fn(&IrStmt) -> bool) -> usize {
        let mut n = 0;
        for f in self.all_functions() {
            walk(&f.body, &mut |s| {
                if pred(s) {
                    n += 1;
                }
            });
        }
        n
    }
}

fn lit(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Sym(s) => f.write_str(s),
            Operand::Lit(v) => f.write_str(&lit(*v)),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Val(o) => write!(f, "{o}"),
            Arg::Cell(s) | Arg::Kont(s) | Arg::Tree(s) => f.write_str(s),
        }
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn write_block(f: &mut fmt::Formatter<'_>, block: &[IrStmt], indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    for s in block {
        match s {
            IrStmt::Bind { sym, op, lhs, rhs } => {
                writeln!(f, "{pad}{sym} = {lhs} {} {rhs}", op.symbol())?
            }
            IrStmt::CellNew { sym, init } => writeln!(f, "{pad}{sym} = ref {init}")?,
            IrStmt::CellRead { sym, cell } => writeln!(f, "{pad}{sym} = ! {cell}")?,
            IrStmt::CellAccum { cell, value } => writeln!(f, "{pad}{cell} += {value}")?,
            IrStmt::CellSet { cell, value } => writeln!(f, "{pad}{cell} := {value}")?,
            IrStmt::Call { callee, args } => {
                let name = match callee {
                    Callee::Fn(n) | Callee::Kont(n) => n,
                };
                writeln!(f, "{pad}{name}({})", join(args))?
            }
            IrStmt::MakeKont {
                sym,
                func,
                captures,
            } => writeln!(f, "{pad}{sym} = kont {func}[{}]", join(captures))?,
            IrStmt::TreeCase {
                tree,
                value,
                left,
                right,
                node,
                leaf,
            } => {
                writeln!(f, "{pad}if ({tree}.notEmpty) {{")?;
                writeln!(
                    f,
                    "{pad}  {value}, {left}, {right} = {tree}.value, {tree}.left, {tree}.right"
                )?;
                write_block(f, node, indent + 1)?;
                writeln!(f, "{pad}}} else {{")?;
                write_block(f, leaf, indent + 1)?;
                writeln!(f, "{pad}}}")?;
            }
            IrStmt::Cond {
                guard,
                then_,
                else_,
            } => {
                writeln!(f, "{pad}if ({guard}) {{")?;
                write_block(f, then_, indent + 1)?;
                writeln!(f, "{pad}}} else {{")?;
                write_block(f, else_, indent + 1)?;
                writeln!(f, "{pad}}}")?;
            }
            IrStmt::Return(o) => writeln!(f, "{pad}return {o}")?,
        }
    }
    Ok(())
}

fn write_function(f: &mut fmt::Formatter<'_>, func: &IrFunction) -> fmt::Result {
    let params: Vec<String> = func
        .params
        .iter()
        .map(|p| match p.kind {
            Kind::Cell => format!("&{}", p.sym),
            _ => p.sym.clone(),
        })
        .collect();
    writeln!(f, "def {}({}) = {{", func.name, params.join(", "))?;
    write_block(f, &func.body, 1)?;
    writeln!(f, "}}")
}

/// Pseudo-IR listing: helper functions first, entry last.
impl fmt::Display for IrProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for func in &self.functions {
            write_function(f, func)?;
        }
        write_function(f, &self.entry)
    }
}
