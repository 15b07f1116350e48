//! Reverse mode with shift/reset in the generated program: each arithmetic
//! operation captures the rest of the forward pass, runs it, then performs
//! its own adjoint updates.

use super::common::{arith_step, bind_operand, const_pair};
use crate::error::{check_source, expect_lambda, TransformError};
use crate::lang::{Expr, NameGen};
use crate::runtime::OpKind;

struct Ts {
    gen: NameGen,
}

impl Ts {
    fn arith(&mut self, op: Option<OpKind>, a: &Expr, b: &Expr) -> Expr {
        let ta = self.go(a);
        let tb = self.go(b);
        let g = &mut self.gen;
        bind_operand(g, ta, move |g, p1| {
            bind_operand(g, tb, move |g, p2| match op {
                Some(op) => {
                    let k = g.fresh("k");
                    let body =
                        arith_step(g, op, &p1, &p2, |_, v| Expr::app(Expr::var(k.clone()), v));
                    Expr::shift(k, body)
                }
                None => Expr::gt(Expr::fst(p1), Expr::fst(p2)),
            })
        })
    }

    fn go(&mut self, e: &Expr) -> Expr {
        use Expr::*;
        match e {
            Const(c) => const_pair(*c),
            Unit | Var(_) => e.clone(),
            Add(a, b) => self.arith(Some(OpKind::Add), a, b),
            Mul(a, b) => self.arith(Some(OpKind::Mul), a, b),
            Gt(a, b) => self.arith(None, a, b),
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

pub fn rev_transform_target_shift(e: &Expr) -> Result<Expr, TransformError> {
    check_source(e)?;
    Ok(Ts {
        gen: NameGen::for_expr(e),
    }
    .go(e))
}

/// `λx. let xv = (x, ref 0) in reset (let zv = D[f] xv in zv.1 := 1.0); !xv.1`
pub fn target_shift_wrapper(f: &Expr) -> Result<Expr, TransformError> {
    expect_lambda(f)?;
    let mut ts = Ts {
        gen: NameGen::for_expr(f),
    };
    let df = ts.go(f);
    let g = &mut ts.gen;
    let (x, xv, zv) = (g.fresh("x"), g.fresh("v"), g.fresh("v"));
    let run = Expr::reset(Expr::let_(
        zv.clone(),
        Expr::app(df, Expr::var(xv.clone())),
        Expr::assign(Expr::snd(Expr::var(zv)), Expr::Const(1.0)),
    ));
    let body = super::common::seq(g, run, Expr::deref(Expr::snd(Expr::var(xv.clone()))));
    Ok(Expr::lam(
        x.clone(),
        Expr::let_(
            xv,
            Expr::pair(Expr::var(x), Expr::ref_(Expr::Const(0.0))),
            body,
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn rules() {
        assert_eq!(
            rev_transform_target_shift(&Expr::Const(5.0)).unwrap(),
            parse("(pair 5.0 (ref 0.0))").unwrap()
        );
        let mul = rev_transform_target_shift(&parse("(* a b)").unwrap()).unwrap();
        let want = parse(
            "(shift _k0 (let _v1 (pair (* (fst a) (fst b)) (ref 0.0)) \
             (let _u3 (app _k0 _v1) \
             (let _u2 (assign (snd a) (+ (deref (snd a)) (* (deref (snd _v1)) (fst b)))) \
             (assign (snd b) (+ (deref (snd b)) (* (deref (snd _v1)) (fst a))))))))",
        )
        .unwrap();
        assert_eq!(mul, want);
        let lam = rev_transform_target_shift(&parse("(lam y (pair y y))").unwrap()).unwrap();
        assert_eq!(lam, parse("(lam y (pair y y))").unwrap());
    }
}
