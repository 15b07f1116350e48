//! The reverse-mode CPS translation written directly with meta-level
//! continuations: every rule takes the code-building continuation as an
//! explicit argument instead of capturing it.

use super::common::{arith_step, bind_effect, bind_operand, const_pair, wavy_lam, wavy_let};
use super::Ren;
use crate::error::{check_source, expect_lambda, TransformError};
use crate::lang::{Expr, NameGen};
use crate::runtime::OpKind;

/// A meta continuation: what to build once the value's code is known.
pub type Kappa<'a> = Box<dyn FnOnce(&mut NameGen, Expr) -> Expr + 'a>;

fn kvar<'a>(k: String) -> Kappa<'a> {
    Box::new(move |_, v| Expr::app(Expr::var(k), v))
}

fn cps<'a>(g: &mut NameGen, e: &'a Expr, ren: Ren, kappa: Kappa<'a>) -> Expr {
    use Expr::*;
    match e {
        Const(c) => kappa(g, const_pair(*c)),
        Unit => kappa(g, Unit),
        Var(y) => kappa(g, Expr::var(super::lookup(&ren, y))),
        Add(a, b) => arith(g, Some(OpKind::Add), a, b, ren, kappa),
        Mul(a, b) => arith(g, Some(OpKind::Mul), a, b, ren, kappa),
        Gt(a, b) => arith(g, None, a, b, ren, kappa),
        Lam(y, body) => {
            let k = g.fresh("k");
            let ren = super::extend(&ren, y, y);
            let inner = cps(g, body, ren, kvar(k.clone()));
            kappa(g, Expr::lam(y.clone(), Expr::lam(k, inner)))
        }
        App(a, b) => {
            let ren2 = ren.clone();
            cps(
                g,
                a,
                ren,
                Box::new(move |g, m| {
                    cps(
                        g,
                        b,
                        ren2,
                        Box::new(move |g, n| {
                            let x = g.fresh("a");
                            let cont = wavy_lam(x.clone(), kappa(g, Expr::var(x)));
                            Expr::app(Expr::app(m, n), cont)
                        }),
                    )
                }),
            )
        }
        Let(y, e1, e2) => {
            let ren2 = ren.clone();
            cps(
                g,
                e1,
                ren,
                Box::new(move |g, v1| match v1 {
                    Var(z) => cps(g, e2, super::extend(&ren2, y, &z), kappa),
                    rhs => {
                        let body = cps(g, e2, super::extend(&ren2, y, y), kappa);
                        Expr::let_(y.clone(), rhs, body)
                    }
                }),
            )
        }
        Fst(a) => cps(g, a, ren, Box::new(move |g, v| kappa(g, Expr::fst(v)))),
        Snd(a) => cps(g, a, ren, Box::new(move |g, v| kappa(g, Expr::snd(v)))),
        Inl(a) => cps(g, a, ren, Box::new(move |g, v| kappa(g, Expr::inl(v)))),
        Inr(a) => cps(g, a, ren, Box::new(move |g, v| kappa(g, Expr::inr(v)))),
        Ref(a) => cps(g, a, ren, Box::new(move |g, v| kappa(g, Expr::ref_(v)))),
        Deref(a) => cps(
            g,
            a,
            ren,
            Box::new(move |g, v| bind_effect(g, Expr::deref(v), kappa)),
        ),
        Assign(a, b) => {
            let ren2 = ren.clone();
            cps(
                g,
                a,
                ren,
                Box::new(move |g, c| {
                    cps(
                        g,
                        b,
                        ren2,
                        Box::new(move |g, v| bind_effect(g, Expr::assign(c, v), kappa)),
                    )
                }),
            )
        }
        Pair(a, b) => {
            let ren2 = ren.clone();
            cps(
                g,
                a,
                ren,
                Box::new(move |g, v1| {
                    cps(
                        g,
                        b,
                        ren2,
                        Box::new(move |g, v2| kappa(g, Expr::pair(v1, v2))),
                    )
                }),
            )
        }
        Case(s, y1, e1, y2, e2) => {
            let a = g.fresh("a");
            let cont = wavy_lam(a.clone(), kappa(g, Expr::var(a)));
            wavy_let(g, "k", cont, move |g, k1| {
                let Var(k1) = k1 else { unreachable!() };
                let ren2 = ren.clone();
                cps(
                    g,
                    s,
                    ren,
                    Box::new(move |g, v| {
                        let b1 = cps(g, e1, super::extend(&ren2, y1, y1), kvar(k1.clone()));
                        let b2 = cps(g, e2, super::extend(&ren2, y2, y2), kvar(k1));
                        Expr::case(v, y1.clone(), b1, y2.clone(), b2)
                    }),
                )
            })
        }
        Shift(..) | Reset(_) | If(..) | LetRec(..) | Seq(..) => {
            unreachable!("rejected by check_source")
        }
    }
}

fn arith<'a>(
    g: &mut NameGen,
    op: Option<OpKind>,
    a: &'a Expr,
    b: &'a Expr,
    ren: Ren,
    kappa: Kappa<'a>,
) -> Expr {
    let ren2 = ren.clone();
    cps(
        g,
        a,
        ren,
        Box::new(move |g, v1| {
            bind_operand(g, v1, move |g, p1| {
                cps(
                    g,
                    b,
                    ren2,
                    Box::new(move |g, v2| {
                        bind_operand(g, v2, move |g, p2| match op {
                            Some(op) => arith_step(g, op, &p1, &p2, kappa),
                            None => kappa(g, Expr::gt(Expr::fst(p1), Expr::fst(p2))),
                        })
                    }),
                )
            })
        }),
    )
}

pub fn rev_transform_full_cps(e: &Expr) -> Result<Expr, TransformError> {
    check_source(e)?;
    let mut g = NameGen::for_expr(e);
    Ok(cps(&mut g, e, Ren::default(), Box::new(|_, v| v)))
}

/// Same shape as the meta-shift wrapper; `D[f]` is run with the
/// continuation that applies its value.
pub fn full_cps_wrapper(f: &Expr) -> Result<Expr, TransformError> {
    expect_lambda(f)?;
    let mut g = NameGen::for_expr(f);
    let df = cps(&mut g, f, Ren::default(), Box::new(|_, v| v));
    Ok(super::cps_wrapper(&mut g, df))
}
