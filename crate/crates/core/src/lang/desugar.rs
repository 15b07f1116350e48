//! Removal of the derived constructs `if`, `letrec` and `seq`.

use super::expr::Expr;
use super::fresh::{freshen, NameGen};

/// Rewrites sugar into core forms. Core-only input is returned unchanged.
pub fn desugar(e: &Expr) -> Expr {
    if !e.has_sugar() {
        return e.clone();
    }
    let mut gen = NameGen::for_expr(e);
    go(e, &mut gen)
}

/// `freshen(desugar(e))`: the normal entry point for every transformation.
pub fn prepare(e: &Expr) -> Expr {
    freshen(&desugar(e))
}

/// `true` is `inl ()`, `false` is `inr ()`.
pub fn bool_value(b: bool) -> Expr {
    if b {
        Expr::inl(Expr::Unit)
    } else {
        Expr::inr(Expr::Unit)
    }
}

fn go(e: &Expr, gen: &mut NameGen) -> Expr {
    use Expr::*;
    let mut r = |e: &Expr| Box::new(go(e, gen));
    match e {
        Const(_) | Unit | Var(_) => e.clone(),
        Add(a, c) => Add(r(a), r(c)),
        Mul(a, c) => Mul(r(a), r(c)),
        Gt(a, c) => Gt(r(a), r(c)),
        App(a, c) => App(r(a), r(c)),
        Pair(a, c) => Pair(r(a), r(c)),
        Assign(a, c) => Assign(r(a), r(c)),
        Fst(a) => Fst(r(a)),
        Snd(a) => Snd(r(a)),
        Inl(a) => Inl(r(a)),
        Inr(a) => Inr(r(a)),
        Ref(a) => Ref(r(a)),
        Deref(a) => Deref(r(a)),
        Reset(a) => Reset(r(a)),
        Lam(p, body) => Lam(p.clone(), r(body)),
        Shift(k, body) => Shift(k.clone(), r(body)),
        Let(n, e1, e2) => Let(n.clone(), r(e1), r(e2)),
        Case(s, n1, e1, n2, e2) => Case(r(s), n1.clone(), r(e1), n2.clone(), r(e2)),
        If(c, t, f) => {
            let (c, t, f) = (go(c, gen), go(t, gen), go(f, gen));
            let u1 = gen.fresh("u");
            let u2 = gen.fresh("u");
            Expr::case(c, u1, t, u2, f)
        }
        Seq(a, c) => {
            let (a, c) = (go(a, gen), go(c, gen));
            Expr::let_(gen.fresh("u"), a, c)
        }
        LetRec(f, x, body, rest) => {
            // let f0 = λf1. λx. let f = f1 f1 in body in let f = f0 f0 in rest
            let (body, rest) = (go(body, gen), go(rest, gen));
            let f0 = gen.fresh("f");
            let f1 = gen.fresh("f");
            let self_app = |g: &str| Expr::app(Expr::var(g), Expr::var(g));
            let knot = Expr::lam(
                f1.clone(),
                Expr::lam(x.clone(), Expr::let_(f.clone(), self_app(&f1), body)),
            );
            Expr::let_(f0.clone(), knot, Expr::let_(f.clone(), self_app(&f0), rest))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn if_becomes_case() {
        let e = desugar(&parse("(if b t e)").unwrap());
        match e {
            Expr::Case(s, _, t, _, f) => {
                assert_eq!(*s, Expr::var("b"));
                assert_eq!(*t, Expr::var("t"));
                assert_eq!(*f, Expr::var("e"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn letrec_self_application() {
        let e = desugar(&parse("(letrec f (lam x (app f x)) (app f 1.0))").unwrap());
        let want = parse(
            "(let _f0 (lam _f1 (lam x (let f (app _f1 _f1) (app f x)))) \
             (let f (app _f0 _f0) (app f 1.0)))",
        )
        .unwrap();
        assert_eq!(e, want);
    }

    #[test]
    fn core_input_unchanged() {
        let e = parse("(lam x (case (> x 0.0) a x b 1.0))").unwrap();
        assert_eq!(desugar(&e), e);
    }
}
