//! Forward-mode source transformation: every real travels as a
//! `(primal, tangent)` pair.

use crate::error::{check_source, expect_lambda, TransformError};
use crate::lang::{apply_real, prepare, Expr, NameGen};

/// How the translated operand of `+`/`*` is projected.
enum Operand {
    /// A variable bound to a pair; projected with `fst`/`snd`.
    Named(Expr),
    /// A literal `(c, 0)`; projected statically, which evaluates the same
    /// float operations as projecting at run time.
    Literal(f64, f64),
}

impl Operand {
    fn primal(&self) -> Expr {
        match self {
            Operand::Named(v) => Expr::fst(v.clone()),
            Operand::Literal(c, _) => Expr::Const(*c),
        }
    }

    fn tangent(&self) -> Expr {
        match self {
            Operand::Named(v) => Expr::snd(v.clone()),
            Operand::Literal(_, d) => Expr::Const(*d),
        }
    }
}

struct Fwd {
    gen: NameGen,
}

impl Fwd {
    /// Names a translated operand, let-binding it unless it is already a
    /// variable or a constant pair. Bindings are pushed to `lets` in order.
    fn operand(&mut self, t: Expr, lets: &mut Vec<(String, Expr)>) -> Operand {
        match t {
            Expr::Var(_) => Operand::Named(t),
            Expr::Pair(a, b) if matches!((&*a, &*b), (Expr::Const(_), Expr::Const(_))) => {
                let (Expr::Const(c), Expr::Const(d)) = (*a, *b) else {
                    unreachable!()
                };
                Operand::Literal(c, d)
            }
            other => {
                let p = self.gen.fresh("p");
                lets.push((p.clone(), other));
                Operand::Named(Expr::var(p))
            }
        }
    }

    fn arith(&mut self, a: &Expr, b: &Expr, build: impl FnOnce(Operand, Operand) -> Expr) -> Expr {
        let mut lets = Vec::new();
        let ta = self.go(a);
        let oa = self.operand(ta, &mut lets);
        let tb = self.go(b);
        let ob = self.operand(tb, &mut lets);
        let mut out = build(oa, ob);
        for (n, rhs) in lets.into_iter().rev() {
            out = Expr::let_(n, rhs, out);
        }
        out
    }

    fn go(&mut self, e: &Expr) -> Expr {
        use Expr::*;
        match e {
            Const(c) => Expr::pair(Const(*c), Const(0.0)),
            Unit | Var(_) => e.clone(),
            Add(a, b) => self.arith(a, b, |p, q| {
                Expr::pair(
                    Expr::add(p.primal(), q.primal()),
                    Expr::add(p.tangent(), q.tangent()),
                )
            }),
            Mul(a, b) => self.arith(a, b, |p, q| {
                Expr::pair(
                    Expr::mul(p.primal(), q.primal()),
                    Expr::add(
                        Expr::mul(p.primal(), q.tangent()),
                        Expr::mul(p.tangent(), q.primal()),
                    ),
                )
            }),
            // Guards compare primals only.
            Gt(a, b) => self.arith(a, b, |p, q| Expr::gt(p.primal(), q.primal())),
            Lam(y, body) => Expr::lam(y.clone(), self.go(body)),
            App(a, b) => Expr::app(self.go(a), self.go(b)),
            Let(y, e1, e2) => Expr::let_(y.clone(), self.go(e1), self.go(e2)),
            Pair(a, b) => Expr::pair(self.go(a), self.go(b)),
            Fst(a) => Expr::fst(self.go(a)),
            Snd(a) => Expr::snd(self.go(a)),
            Inl(a) => Expr::inl(self.go(a)),
            Inr(a) => Expr::inr(self.go(a)),
            Ref(a) => Expr::ref_(self.go(a)),
            Deref(a) => Expr::deref(self.go(a)),
            Assign(a, b) => Expr::assign(self.go(a), self.go(b)),
            Case(s, y1, e1, y2, e2) => {
                Expr::case(self.go(s), y1.clone(), self.go(e1), y2.clone(), self.go(e2))
            }
            Shift(..) | Reset(_) | If(..) | LetRec(..) | Seq(..) => {
                unreachable!("rejected by check_source")
            }
        }
    }
}

/// The forward translation of `e`. `e` must be core syntax without
/// shift/reset.
pub fn fwd_transform(e: &Expr) -> Result<Expr, TransformError> {
    check_source(e)?;
    Ok(Fwd {
        gen: NameGen::for_expr(e),
    }
    .go(e))
}

/// `λx. let v = D[f] (x, 1.0) in snd v`.
pub fn forward_wrapper(f: &Expr) -> Result<Expr, TransformError> {
    expect_lambda(f)?;
    let mut fwd = Fwd {
        gen: NameGen::for_expr(f),
    };
    let df = fwd.go(f);
    let x = fwd.gen.fresh("x");
    let v = fwd.gen.fresh("v");
    Ok(Expr::lam(
        x.clone(),
        Expr::let_(
            v.clone(),
            Expr::app(df, Expr::pair(Expr::var(x), Expr::Const(1.0))),
            Expr::snd(Expr::var(v)),
        ),
    ))
}

/// Prepares `f`, builds its forward wrapper, and evaluates it at `x0`.
pub fn grad_forward(f: &Expr, x0: f64) -> Result<f64, crate::Error> {
    let w = forward_wrapper(&prepare(f))?;
    Ok(apply_real(&w, x0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn rules() {
        assert_eq!(
            fwd_transform(&Expr::Const(3.0)).unwrap(),
            parse("(pair 3.0 0.0)").unwrap()
        );
        let add = fwd_transform(&parse("(+ (app f a) b)").unwrap()).unwrap();
        let want = parse("(let _p0 (app f a) (pair (+ (fst _p0) (fst b)) (+ (snd _p0) (snd b))))")
            .unwrap();
        assert_eq!(add, want);
        assert_eq!(
            fwd_transform(&parse("(lam y y)").unwrap()).unwrap(),
            parse("(lam y y)").unwrap()
        );
        assert!(matches!(
            fwd_transform(&parse("(reset 1.0)").unwrap()),
            Err(TransformError::Control("reset"))
        ));
    }

    #[test]
    fn gradients() {
        let g = |s: &str, x: f64| grad_forward(&parse(s).unwrap(), x).unwrap();
        assert_eq!(g("(lam x x)", 7.0), 1.0);
        assert_eq!(g("(lam x (+ (* 2.0 x) (* (* x x) x)))", 1.0), 5.0);
        assert_eq!(g("(lam x 4.0)", 9.0), 0.0);
        assert_eq!(g("(lam x (if (> x 0.0) (* x x) (* 3.0 x)))", -1.0), 3.0);
    }
}
