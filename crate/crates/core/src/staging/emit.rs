//! C-like source text for an IR program. Helper functions become
//! forward-declared `std::function` values inside `Snippet` so that they
//! may call each other and themselves.

use super::ir::*;
use std::collections::HashMap;
use std::fmt::Write;

const KONT_TYPE: &str = "std::function<void(double, double&)>";

fn c_type(k: Kind) -> &'static str {
    match k {
        Kind::Val => "double",
        Kind::Cell => "double&",
        Kind::Kont => KONT_TYPE,
        Kind::Tree => "Tree",
    }
}

fn c_lit(v: f64) -> String {
    if v.is_nan() {
        "NAN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "INFINITY" } else { "-INFINITY" }.into()
    } else {
        format!("{v}")
    }
}

/// Local renaming: the first value parameter prints as `x` and the first
/// cell parameter as `d`.
struct Names(HashMap<Sym, String>);

impl Names {
    fn for_function(f: &IrFunction, is_entry: bool) -> Names {
        let mut m = HashMap::new();
        if !is_entry {
            for (kind, canon) in [(Kind::Val, "x"), (Kind::Cell, "d")] {
                if let Some(p) = f.params.iter().find(|p| p.kind == kind) {
                    m.insert(p.sym.clone(), canon.to_string());
                }
            }
        }
        Names(m)
    }

    fn sym<'s>(&'s self, s: &'s str) -> &'s str {
        self.0.get(s).map_or(s, String::as_str)
    }

    fn op(&self, o: &Operand) -> String {
        match o {
            Operand::Sym(s) => self.sym(s).to_string(),
            Operand::Lit(v) => c_lit(*v),
        }
    }

    fn arg(&self, a: &Arg) -> String {
        match a {
            Arg::Val(o) => self.op(o),
            Arg::Cell(s) | Arg::Kont(s) | Arg::Tree(s) => self.sym(s).to_string(),
        }
    }

    fn args(&self, args: &[Arg]) -> String {
        args.iter()
            .map(|a| self.arg(a))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn signature(f: &IrFunction, names: &Names) -> String {
    f.params
        .iter()
        .map(|p| format!("{} {}", c_type(p.kind), names.sym(&p.sym)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fn_type(f: &IrFunction) -> String {
    let ps: Vec<&str> = f.params.iter().map(|p| c_type(p.kind)).collect();
    format!("std::function<void({})>", ps.join(", "))
}

fn block(out: &mut String, b: &[IrStmt], names: &Names, depth: usize) {
    let pad = "  ".repeat(depth);
    for s in b {
        match s {
            IrStmt::Bind { sym, op, lhs, rhs } => {
                let ty = if *op == IrOp::Gt { "bool" } else { "double" };
                let (l, r) = (names.op(lhs), names.op(rhs));
                let _ = writeln!(
                    out,
                    "{pad}{ty} {} = {l} {} {r};",
                    names.sym(sym),
                    op.symbol()
                );
            }
            IrStmt::CellNew { sym, init } => {
                let _ = writeln!(out, "{pad}double {} = {};", names.sym(sym), names.op(init));
            }
            IrStmt::CellRead { sym, cell } => {
                let _ = writeln!(out, "{pad}double {} = {};", names.sym(sym), names.sym(cell));
            }
            IrStmt::CellAccum { cell, value } => {
                let _ = writeln!(out, "{pad}{} += {};", names.sym(cell), names.op(value));
            }
            IrStmt::CellSet { cell, value } => {
                let _ = writeln!(out, "{pad}{} = {};", names.sym(cell), names.op(value));
            }
            IrStmt::Call { callee, args } => {
                let f = match callee {
                    Callee::Fn(n) => n.as_str(),
                    Callee::Kont(k) => names.sym(k),
                };
                let _ = writeln!(out, "{pad}{f}({});", names.args(args));
            }
            IrStmt::MakeKont {
                sym,
                func,
                captures,
            } => {
                let mut call = vec!["xk".to_string(), "dk".to_string()];
                call.extend(captures.iter().map(|a| names.arg(a)));
                let _ = writeln!(
                    out,
                    "{pad}{KONT_TYPE} {} = [&](double xk, double& dk) {{ {func}({}); }};",
                    names.sym(sym),
                    call.join(", ")
                );
            }
            IrStmt::TreeCase {
                tree,
                value,
                left,
                right,
                node,
                leaf,
            } => {
                let t = names.sym(tree);
                let _ = writeln!(out, "{pad}if ({t}.notEmpty) {{");
                let inner = "  ".repeat(depth + 1);
                let _ = writeln!(out, "{inner}double {} = {t}.value;", names.sym(value));
                let _ = writeln!(out, "{inner}Tree {} = {t}.left;", names.sym(left));
                let _ = writeln!(out, "{inner}Tree {} = {t}.right;", names.sym(right));
                block(out, node, names, depth + 1);
                let _ = writeln!(out, "{pad}}} else {{");
                block(out, leaf, names, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            IrStmt::Cond {
                guard,
                then_,
                else_,
            } => {
                let _ = writeln!(out, "{pad}if ({}) {{", names.op(guard));
                block(out, then_, names, depth + 1);
                if !else_.is_empty() {
                    let _ = writeln!(out, "{pad}}} else {{");
                    block(out, else_, names, depth + 1);
                }
                let _ = writeln!(out, "{pad}}}");
            }
            IrStmt::Return(o) => {
                let _ = writeln!(out, "{pad}return {};", names.op(o));
            }
        }
    }
}

/// Deterministic C-like text, 2-space indented, LF line endings.
pub fn emit_c(p: &IrProgram) -> String {
    let mut out = String::new();
    let entry_names = Names::for_function(&p.entry, true);
    let _ = writeln!(
        out,
        "double {}({}) {{",
        p.entry.name,
        signature(&p.entry, &entry_names)
    );
    for f in &p.functions {
        let _ = writeln!(out, "  {} {};", fn_type(f), f.name);
    }
    for f in &p.functions {
        let names = Names::for_function(f, false);
        let _ = writeln!(out, "  {} = [&]({}) {{", f.name, signature(f, &names));
        block(&mut out, &f.body, &names, 2);
        let _ = writeln!(out, "  }};");
    }
    block(&mut out, &p.entry.body, &entry_names, 1);
    out.push_str("}\n");
    out
}
