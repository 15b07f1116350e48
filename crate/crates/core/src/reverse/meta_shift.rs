//! Reverse mode with shift/reset at translation time. The translator runs in
//! a continuation monad over generated code, so `shift` captures the rest of
//! the code under construction and the output is in explicit CPS with no
//! control operators left.

use super::common::{arith_step, bind_effect, bind_operand, const_pair, wavy_lam, wavy_let};
use super::Ren;
use crate::error::{check_source, expect_lambda, TransformError};
use crate::lang::{Expr, NameGen};
use crate::runtime::OpKind;

/// A static continuation: the code still to be built, given a value.
pub type K<'a, T> = Box<dyn FnOnce(&mut NameGen, T) -> Expr + 'a>;

/// A translation-time computation producing a `T` for the code around it.
pub struct Meta<'a, T>(Build<'a, T>);

type Build<'a, T> = Box<dyn FnOnce(&mut NameGen, K<'a, T>) -> Expr + 'a>;

impl<'a, T: 'a> Meta<'a, T> {
    pub fn new(f: impl FnOnce(&mut NameGen, K<'a, T>) -> Expr + 'a) -> Self {
        Meta(Box::new(f))
    }

    pub fn pure(v: T) -> Self {
        Meta::new(move |g, k| k(g, v))
    }

    pub fn bind<U: 'a>(self, f: impl FnOnce(T) -> Meta<'a, U> + 'a) -> Meta<'a, U> {
        Meta::new(move |g, k| self.run(g, Box::new(move |g, v| f(v).run(g, k))))
    }

    pub fn map<U: 'a>(self, f: impl FnOnce(T) -> U + 'a) -> Meta<'a, U> {
        self.bind(move |v| Meta::pure(f(v)))
    }

    pub fn run(self, g: &mut NameGen, k: K<'a, T>) -> Expr {
        (self.0)(g, k)
    }
}

fn identity<'a>() -> K<'a, Expr> {
    Box::new(|_, e| e)
}

/// Captures the static continuation up to the nearest `reset`; the body
/// runs under an implicit `reset`.
pub fn shift<'a, T: 'a>(h: impl FnOnce(K<'a, T>) -> Meta<'a, Expr> + 'a) -> Meta<'a, T> {
    Meta::new(move |g, k| h(k).run(g, identity()))
}

pub fn reset<'a>(m: Meta<'a, Expr>) -> Meta<'a, Expr> {
    Meta::new(move |g, k| {
        let e = m.run(g, identity());
        k(g, e)
    })
}

/// Lifts a code-building step that needs the name supply.
fn with_gen<'a>(f: impl FnOnce(&mut NameGen, K<'a, Expr>) -> Expr + 'a) -> Meta<'a, Expr> {
    Meta::new(f)
}

fn translate<'a>(e: &'a Expr, ren: Ren) -> Meta<'a, Expr> {
    use Expr::*;
    match e {
        Const(c) => Meta::pure(const_pair(*c)),
        Unit => Meta::pure(Unit),
        Var(y) => Meta::pure(Expr::var(super::lookup(&ren, y))),
        Add(a, b) => arith(Some(OpKind::Add), a, b, ren),
        Mul(a, b) => arith(Some(OpKind::Mul), a, b, ren),
        Gt(a, b) => arith(None, a, b, ren),
        Lam(y, body) => {
            let body_ren = super::extend(&ren, y, y);
            with_gen(move |g, kk| {
                let k = g.fresh("k");
                let kv = Expr::var(k.clone());
                let inner = reset(translate(body, body_ren).map(move |v| Expr::app(kv, v)))
                    .run(g, identity());
                kk(g, Expr::lam(y.clone(), Expr::lam(k, inner)))
            })
        }
        App(a, b) => shift(move |k| {
            let ren2 = ren.clone();
            translate(a, ren).bind(move |m| {
                translate(b, ren2).bind(move |n| {
                    with_gen(move |g, kk| {
                        let x = g.fresh("a");
                        let cont = wavy_lam(x.clone(), k(g, Expr::var(x)));
                        kk(g, Expr::app(Expr::app(m, n), cont))
                    })
                })
            })
        }),
        Let(y, e1, e2) => shift(move |k| {
            let ren2 = ren.clone();
            translate(e1, ren).bind(move |v1| {
                with_gen(move |g, kk| {
                    let code = match v1 {
                        Var(z) => {
                            let ren3 = super::extend(&ren2, y, &z);
                            reset(translate(e2, ren3).bind(move |v2| {
                                with_gen(move |g, kk| {
                                    let c = k(g, v2);
                                    kk(g, c)
                                })
                            }))
                            .run(g, identity())
                        }
                        rhs => {
                            let body =
                                reset(translate(e2, super::extend(&ren2, y, y)).bind(move |v2| {
                                    with_gen(move |g, kk| {
                                        let c = k(g, v2);
                                        kk(g, c)
                                    })
                                }))
                                .run(g, identity());
                            Expr::let_(y.clone(), rhs, body)
                        }
                    };
                    kk(g, code)
                })
            })
        }),
        Fst(a) => translate(a, ren).map(Expr::fst),
        Snd(a) => translate(a, ren).map(Expr::snd),
        Inl(a) => translate(a, ren).map(Expr::inl),
        Inr(a) => translate(a, ren).map(Expr::inr),
        Ref(a) => translate(a, ren).map(Expr::ref_),
        Deref(a) => translate(a, ren).bind(|v| effect(Expr::deref(v))),
        Assign(a, b) => {
            let ren2 = ren.clone();
            translate(a, ren)
                .bind(move |c| translate(b, ren2).bind(move |v| effect(Expr::assign(c, v))))
        }
        Pair(a, b) => {
            let ren2 = ren.clone();
            translate(a, ren).bind(move |v1| translate(b, ren2).map(move |v2| Expr::pair(v1, v2)))
        }
        Case(s, y1, e1, y2, e2) => shift(move |k| {
            with_gen(move |g, kk| {
                let a = g.fresh("a");
                let cont = wavy_lam(a.clone(), k(g, Expr::var(a)));
                let code = wavy_let(g, "k", cont, move |g, k1| {
                    let (r1, r2) = (super::extend(&ren, y1, y1), super::extend(&ren, y2, y2));
                    let k2 = k1.clone();
                    translate(s, ren)
                        .bind(move |v| {
                            reset(translate(e1, r1).map(move |m| Expr::app(k1, m))).bind(
                                move |b1| {
                                    reset(translate(e2, r2).map(move |n| Expr::app(k2, n))).map(
                                        move |b2| Expr::case(v, y1.clone(), b1, y2.clone(), b2),
                                    )
                                },
                            )
                        })
                        .run(g, identity())
                });
                kk(g, code)
            })
        }),
        Shift(..) | Reset(_) | If(..) | LetRec(..) | Seq(..) => {
            unreachable!("rejected by check_source")
        }
    }
}

fn effect<'a>(code: Expr) -> Meta<'a, Expr> {
    with_gen(move |g, kk| bind_effect(g, code, |g, v| kk(g, v)))
}

fn arith<'a>(op: Option<OpKind>, a: &'a Expr, b: &'a Expr, ren: Ren) -> Meta<'a, Expr> {
    let ren2 = ren.clone();
    let operands = translate(a, ren).bind(move |v1| {
        with_gen(move |g, kk| {
            bind_operand(g, v1, move |g, p1| {
                translate(b, ren2)
                    .bind(move |v2| {
                        with_gen(move |g, kk| {
                            bind_operand(g, v2, move |g, p2| kk(g, Expr::pair(p1, p2)))
                        })
                    })
                    .run(g, kk)
            })
        })
    });
    match op {
        None => operands.map(|ps| {
            let Expr::Pair(p1, p2) = ps else {
                unreachable!()
            };
            Expr::gt(Expr::fst(*p1), Expr::fst(*p2))
        }),
        Some(op) => shift(move |k| {
            operands.bind(move |ps| {
                with_gen(move |g, kk| {
                    let Expr::Pair(p1, p2) = ps else {
                        unreachable!()
                    };
                    let code = arith_step(g, op, &p1, &p2, k);
                    kk(g, code)
                })
            })
        }),
    }
}

/// The CPS translation of `e`.
pub fn rev_transform_meta_shift(e: &Expr) -> Result<Expr, TransformError> {
    check_source(e)?;
    let mut g = NameGen::for_expr(e);
    Ok(reset(translate(e, Ren::default())).run(&mut g, identity()))
}

/// `λx. let xv = (x, ref 0) in (D[f] xv) (λz. z.1 := 1.0); !xv.1`
pub fn meta_shift_wrapper(f: &Expr) -> Result<Expr, TransformError> {
    expect_lambda(f)?;
    let mut g = NameGen::for_expr(f);
    let df = reset(translate(f, Ren::default())).run(&mut g, identity());
    Ok(super::cps_wrapper(&mut g, df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, prepare};

    #[test]
    fn lambda_rule() {
        let out = rev_transform_meta_shift(&parse("(lam y y)").unwrap()).unwrap();
        assert_eq!(out, parse("(lam y (lam _k0 (app _k0 y)))").unwrap());
    }

    #[test]
    fn tail_call_passes_continuation() {
        let out = rev_transform_meta_shift(&parse("(lam y (app f y))").unwrap()).unwrap();
        assert_eq!(out, parse("(lam y (lam _k0 (app (app f y) _k0)))").unwrap());
    }

    #[test]
    fn no_control_left() {
        let f = prepare(&parse("(lam x (+ (* 2.0 x) (* (* x x) x)))").unwrap());
        let out = rev_transform_meta_shift(&f).unwrap();
        assert!(!out.has_control());
    }
}
