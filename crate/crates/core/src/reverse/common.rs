//! Building blocks shared by the reverse-mode translations.

use crate::lang::{Expr, NameGen};
use crate::runtime::OpKind;

/// `a; b` as a let with an unused fresh name, or just `b` when `a` is an
/// atom and so has no effect.
pub fn seq(g: &mut NameGen, a: Expr, b: Expr) -> Expr {
    if a.is_atom() {
        return b;
    }
    Expr::let_(g.fresh("u"), a, b)
}

/// `(c, ref 0)`.
pub fn const_pair(c: f64) -> Expr {
    Expr::pair(Expr::Const(c), Expr::ref_(Expr::Const(0.0)))
}

/// Continues with `code` if it is a variable, otherwise let-binds it first
/// so that the pair it denotes is computed once.
pub fn bind_operand(
    g: &mut NameGen,
    code: Expr,
    body: impl FnOnce(&mut NameGen, Expr) -> Expr,
) -> Expr {
    if matches!(code, Expr::Var(_)) {
        return body(g, code);
    }
    let p = g.fresh("p");
    let rest = body(g, Expr::var(p.clone()));
    Expr::let_(p, code, rest)
}

/// Let-binds a store-touching result so that it executes where it appears
/// in the source, not wherever the continuation places its value.
pub fn bind_effect(
    g: &mut NameGen,
    code: Expr,
    body: impl FnOnce(&mut NameGen, Expr) -> Expr,
) -> Expr {
    if matches!(code, Expr::Deref(_) | Expr::Assign(..)) {
        let t = g.fresh("t");
        let rest = body(g, Expr::var(t.clone()));
        Expr::let_(t, code, rest)
    } else {
        body(g, code)
    }
}

/// Forward step, continuation, backward step for `p1 op p2` where `p1` and
/// `p2` are variables bound to `(value, adjoint cell)` pairs:
///
/// `let v = (p1.0 op p2.0, ref 0) in k v; p1.1 += ..; p2.1 += ..`
pub fn arith_step(
    g: &mut NameGen,
    op: OpKind,
    p1: &Expr,
    p2: &Expr,
    k: impl FnOnce(&mut NameGen, Expr) -> Expr,
) -> Expr {
    let v = Expr::var(g.fresh("v"));
    let (y1, y2) = (Expr::fst(p1.clone()), Expr::fst(p2.clone()));
    let primal = match op {
        OpKind::Add => Expr::add(y1.clone(), y2.clone()),
        OpKind::Mul => Expr::mul(y1.clone(), y2.clone()),
    };
    let call = k(g, v.clone());
    let adj = Expr::deref(Expr::snd(v.clone()));
    let (d1, d2) = match op {
        OpKind::Add => (adj.clone(), adj),
        OpKind::Mul => (Expr::mul(adj.clone(), y2), Expr::mul(adj, y1)),
    };
    let upd1 = Expr::accumulate(Expr::snd(p1.clone()), d1);
    let upd2 = Expr::accumulate(Expr::snd(p2.clone()), d2);
    let backward = seq(g, upd1, upd2);
    let Expr::Var(vn) = v else { unreachable!() };
    let body = seq(g, call, backward);
    Expr::let_(vn, Expr::pair(primal, Expr::ref_(Expr::Const(0.0))), body)
}

/// `λa. k a` contracted to `k` when `k` is a variable.
pub fn wavy_lam(a: String, body: Expr) -> Expr {
    if let Expr::App(f, arg) = &body {
        if let (Expr::Var(k), Expr::Var(x)) = (&**f, &**arg) {
            if *x == a && *k != a {
                return Expr::var(k.clone());
            }
        }
    }
    Expr::lam(a, body)
}

/// A let that disappears, by renaming, when its right-hand side is a
/// variable.
pub fn wavy_let(
    g: &mut NameGen,
    prefix: &str,
    rhs: Expr,
    body: impl FnOnce(&mut NameGen, Expr) -> Expr,
) -> Expr {
    if matches!(rhs, Expr::Var(_)) {
        return body(g, rhs);
    }
    let n = g.fresh(prefix);
    let rest = body(g, Expr::var(n.clone()));
    Expr::let_(n, rhs, rest)
}

/// Applies the two contraction rules at the root of `e` only.
pub fn normalize_tail(e: &Expr) -> Expr {
    match e {
        Expr::Lam(a, body) => wavy_lam(a.clone(), (**body).clone()),
        Expr::Let(y, rhs, body) => match &**rhs {
            Expr::Var(y1) => body.rename_free(y, y1),
            _ => e.clone(),
        },
        _ => e.clone(),
    }
}

/// Any `λa. (k a)` with `k` a variable other than `a`.
pub fn has_eta_redex(e: &Expr) -> bool {
    e.any(&|n| match n {
        Expr::Lam(..) => !matches!(normalize_tail(n), Expr::Lam(..)),
        _ => false,
    })
}

/// Any `let y = z in ..` with `z` a variable.
pub fn has_let_of_variable(e: &Expr) -> bool {
    e.any(&|n| matches!(n, Expr::Let(_, rhs, _) if matches!(**rhs, Expr::Var(_))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn contraction_rules() {
        let p = |s: &str| parse(s).unwrap();
        assert_eq!(normalize_tail(&p("(lam a (app k a))")), p("k"));
        assert_eq!(normalize_tail(&p("(let y y1 (+ y y))")), p("(+ y1 y1)"));
        for s in [
            "(lam a (app a a))",
            "(lam a (app (app f b) a))",
            "(let y (+ a b) y)",
            "x",
        ] {
            assert_eq!(normalize_tail(&p(s)), p(s));
        }
        assert!(has_eta_redex(&p("(pair 1.0 (lam a (app k a)))")));
        assert!(has_let_of_variable(&p("(lam z (let y z y))")));
    }
}
