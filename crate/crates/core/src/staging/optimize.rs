//! IR clean-up: cell scalarization, constant folding, copy propagation,
//! and dead-code removal, iterated to a fixpoint.

use super::ir::*;
use std::collections::{BTreeSet, HashMap};

/// Optimizes `p` without changing its results. The one caveat is the
/// fold `0.0 + x => x`, which differs from IEEE addition only when `x` is
/// `-0.0`; the two results still compare equal.
pub fn ir_optimize(p: &IrProgram) -> IrProgram {
    let mut p = p.clone();
    let mut names = all_syms(&p);
    loop {
        let before = format!("{p:?}");
        for f in std::iter::once(&mut p.entry).chain(p.functions.iter_mut()) {
            scalarize(&mut f.body, &mut names);
            let mut subst = HashMap::new();
            f.body = simplify(std::mem::take(&mut f.body), &mut subst);
            remove_dead(&mut f.body);
        }
        drop_unreachable(&mut p);
        if format!("{p:?}") == before {
            return p;
        }
    }
}

fn all_syms(p: &IrProgram) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    for f in p.all_functions() {
        out.extend(f.params.iter().map(|q| q.sym.clone()));
        walk(&f.body, &mut |s| {
            out.extend(s.defs().into_iter().map(str::to_string));
            out.extend(s.uses().into_iter().map(str::to_string));
        });
    }
    out
}

fn fresh(base: &str, names: &mut BTreeSet<Sym>) -> Sym {
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| names.insert(n.clone()))
        .unwrap()
}

/// True if `c` is only read, accumulated into, or set by statements
/// directly in `block[from..]`.
fn only_direct_ops(block: &[IrStmt], from: usize, c: &str) -> bool {
    block.iter().enumerate().all(|(i, s)| {
        let direct = match s {
            IrStmt::CellRead { cell, .. } => cell == c,
            IrStmt::CellAccum { cell, value } | IrStmt::CellSet { cell, value } => {
                cell == c && value.as_sym() != Some(c)
            }
            _ => false,
        };
        if direct {
            return i > from;
        }
        let mut touches = s.uses().contains(&c);
        for b in s.blocks() {
            walk(b, &mut |n| touches |= n.uses().contains(&c));
        }
        !touches
    })
}

/// Turns cells whose every operation sits in the creating block into
/// plain values.
fn scalarize(block: &mut Vec<IrStmt>, names: &mut BTreeSet<Sym>) {
    for s in block.iter_mut() {
        for b in s.blocks_mut() {
            scalarize(b, names);
        }
    }
    let mut i = 0;
    while i < block.len() {
        let IrStmt::CellNew { sym, init } = &block[i] else {
            i += 1;
            continue;
        };
        let (c, init) = (sym.clone(), init.clone());
        if !only_direct_ops(block, i, &c) {
            i += 1;
            continue;
        }
        let mut cur = init;
        let mut subst: HashMap<Sym, Operand> = HashMap::new();
        let mut out: Vec<IrStmt> = block.drain(..i).collect();
        block.remove(0);
        for mut s in block.drain(..) {
            apply_subst(&mut s, &subst);
            match s {
                IrStmt::CellRead { sym, cell } if cell == c => {
                    subst.insert(sym, cur.clone());
                }
                IrStmt::CellSet { cell, value } if cell == c => cur = value,
                IrStmt::CellAccum { cell, value } if cell == c => {
                    let v = fresh(&c, names);
                    out.push(IrStmt::Bind {
                        sym: v.clone(),
                        op: IrOp::Add,
                        lhs: cur,
                        rhs: value,
                    });
                    cur = Operand::Sym(v);
                }
                other => out.push(other),
            }
        }
        *block = out;
    }
}

fn sub(o: &mut Operand, subst: &HashMap<Sym, Operand>) {
    if let Operand::Sym(s) = o {
        if let Some(r) = subst.get(s) {
            *o = r.clone();
        }
    }
}

/// Rewrites value operands of `s`, nested blocks included.
fn apply_subst(s: &mut IrStmt, subst: &HashMap<Sym, Operand>) {
    if subst.is_empty() {
        return;
    }
    match s {
        IrStmt::Bind { lhs, rhs, .. } => {
            sub(lhs, subst);
            sub(rhs, subst);
        }
        IrStmt::CellNew { init: o, .. }
        | IrStmt::CellAccum { value: o, .. }
        | IrStmt::CellSet { value: o, .. }
        | IrStmt::Cond { guard: o, .. }
        | IrStmt::Return(o) => sub(o, subst),
        IrStmt::Call { args, .. } | IrStmt::MakeKont { captures: args, .. } => {
            for a in args {
                if let Arg::Val(o) = a {
                    sub(o, subst);
                }
            }
        }
        IrStmt::CellRead { .. } | IrStmt::TreeCase { .. } => {}
    }
    for b in s.blocks_mut() {
        for n in b.iter_mut() {
            apply_subst(n, subst);
        }
    }
}

enum Simplified {
    Keep(IrStmt),
    Copy(Operand),
}

fn simplify_bind(sym: Sym, op: IrOp, lhs: Operand, rhs: Operand) -> Simplified {
    use Operand::*;
    match (op, &lhs, &rhs) {
        (_, Lit(a), Lit(b)) => Simplified::Copy(Lit(op.apply(*a, *b))),
        (IrOp::Mul, Lit(one), x) | (IrOp::Mul, x, Lit(one)) if *one == 1.0 => {
            Simplified::Copy(x.clone())
        }
        (IrOp::Add, Lit(z), x) | (IrOp::Add, x, Lit(z)) if *z == 0.0 => Simplified::Copy(x.clone()),
        (IrOp::Add, Sym(a), Sym(b)) if a == b => Simplified::Keep(IrStmt::Bind {
            sym,
            op: IrOp::Mul,
            lhs: Lit(2.0),
            rhs,
        }),
        _ => Simplified::Keep(IrStmt::Bind { sym, op, lhs, rhs }),
    }
}

fn simplify(block: Vec<IrStmt>, subst: &mut HashMap<Sym, Operand>) -> Vec<IrStmt> {
    let mut out = Vec::with_capacity(block.len());
    for mut s in block {
        apply_subst(&mut s, subst);
        match s {
            IrStmt::Bind { sym, op, lhs, rhs } => match simplify_bind(sym.clone(), op, lhs, rhs) {
                Simplified::Keep(s) => out.push(s),
                Simplified::Copy(o) => {
                    subst.insert(sym, o);
                }
            },
            IrStmt::Cond {
                guard: Operand::Lit(g),
                then_,
                else_,
            } => {
                let taken = if g != 0.0 { then_ } else { else_ };
                out.extend(simplify(taken, subst));
            }
            IrStmt::Cond {
                guard,
                then_,
                else_,
            } => {
                let then_ = simplify(then_, subst);
                let else_ = simplify(else_, subst);
                out.push(IrStmt::Cond {
                    guard,
                    then_,
                    else_,
                });
            }
            IrStmt::TreeCase {
                tree,
                value,
                left,
                right,
                node,
                leaf,
            } => {
                let node = simplify(node, subst);
                let leaf = simplify(leaf, subst);
                out.push(IrStmt::TreeCase {
                    tree,
                    value,
                    left,
                    right,
                    node,
                    leaf,
                });
            }
            other => out.push(other),
        }
    }
    out
}

/// Cells that something may observe: read directly or handed to a call
/// or continuation.
fn observed_cells(block: &[IrStmt]) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    walk(block, &mut |s| match s {
        IrStmt::CellRead { cell, .. } => {
            out.insert(cell.clone());
        }
        IrStmt::Call { args, .. } | IrStmt::MakeKont { captures: args, .. } => {
            for a in args {
                if let Arg::Cell(c) = a {
                    out.insert(c.clone());
                }
            }
        }
        _ => {}
    });
    out
}

fn used_syms(block: &[IrStmt]) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    walk(block, &mut |s| {
        if !matches!(s, IrStmt::CellAccum { .. } | IrStmt::CellSet { .. }) {
            out.extend(s.uses().into_iter().map(str::to_string));
        } else if let IrStmt::CellAccum { value, .. } | IrStmt::CellSet { value, .. } = s {
            out.extend(value.as_sym().map(str::to_string));
        }
    });
    out
}

fn remove_dead(body: &mut Vec<IrStmt>) {
    loop {
        let used = used_syms(body);
        let observed = observed_cells(body);
        let mut created = BTreeSet::new();
        walk(body, &mut |s| {
            if let IrStmt::CellNew { sym, .. } = s {
                created.insert(sym.clone());
            }
        });
        let dead_cells: BTreeSet<Sym> = created.difference(&observed).cloned().collect();
        let mut changed = false;
        prune(body, &used, &dead_cells, &mut changed);
        if !changed {
            return;
        }
    }
}

fn prune(
    block: &mut Vec<IrStmt>,
    used: &BTreeSet<Sym>,
    dead_cells: &BTreeSet<Sym>,
    changed: &mut bool,
) {
    let before = block.len();
    block.retain_mut(|s| {
        for b in s.blocks_mut() {
            prune(b, used, dead_cells, changed);
        }
        match s {
            IrStmt::Bind { sym, .. }
            | IrStmt::CellRead { sym, .. }
            | IrStmt::MakeKont { sym, .. } => used.contains(sym),
            IrStmt::CellNew { sym, .. } => !dead_cells.contains(sym),
            IrStmt::CellAccum { cell, .. } | IrStmt::CellSet { cell, .. } => {
                !dead_cells.contains(cell)
            }
            IrStmt::Cond { then_, else_, .. } => !(then_.is_empty() && else_.is_empty()),
            _ => true,
        }
    });
    *changed |= block.len() != before;
}

fn drop_unreachable(p: &mut IrProgram) {
    let mut live: BTreeSet<String> = BTreeSet::new();
    let mut todo = vec![p.entry.name.clone()];
    while let Some(n) = todo.pop() {
        if !live.insert(n.clone()) {
            continue;
        }
        if let Some(f) = p.function(&n) {
            todo.extend(f.callees().into_iter().map(str::to_string));
        }
    }
    p.functions.retain(|f| live.contains(&f.name));
}
