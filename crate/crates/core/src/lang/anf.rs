//! Administrative normal form for the arithmetic fragment.

use super::expr::{Expr, Name};
use super::fresh::{freshen, has_unique_binders, NameGen};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AnfError {
    #[error("'{0}' is outside the arithmetic fragment")]
    NonArithmetic(&'static str),
}

type K<'a> = Box<dyn FnOnce(&mut NameGen, Expr) -> Expr + 'a>;

/// Let-binds every intermediate result so that each `+`/`*` has atomic
/// operands. A top-level `lam` is kept and its body normalized.
pub fn anf(e: &Expr) -> Result<Expr, AnfError> {
    if let Expr::Lam(p, body) = e {
        return Ok(Expr::lam(p.clone(), anf(body)?));
    }
    check(e)?;
    // Lifting a let out of an operand widens its scope, so binders must be
    // distinct from each other and from the free names.
    let e = if has_unique_binders(e) {
        e.clone()
    } else {
        freshen(e)
    };
    let mut gen = NameGen::for_expr(&e);
    Ok(norm(&e, &mut gen, Box::new(|_, a| a)))
}

fn check(e: &Expr) -> Result<(), AnfError> {
    match e {
        Expr::Const(_) | Expr::Var(_) => Ok(()),
        Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Let(_, a, b) => {
            check(a)?;
            check(b)
        }
        other => Err(AnfError::NonArithmetic(other.form_name())),
    }
}

/// True if `e` is already in the shape `anf` produces.
pub fn is_anf(e: &Expr) -> bool {
    match e {
        Expr::Lam(_, body) => is_anf(body),
        Expr::Let(_, e1, e2) => {
            let rhs_ok = match &**e1 {
                Expr::Add(a, b) | Expr::Mul(a, b) => a.is_atom() && b.is_atom(),
                other => other.is_atom(),
            };
            rhs_ok && is_anf(e2)
        }
        other => other.is_atom(),
    }
}

fn norm<'a>(e: &'a Expr, gen: &mut NameGen, k: K<'a>) -> Expr {
    match e {
        Expr::Add(..) | Expr::Mul(..) => {
            let t_slot: Box<dyn FnOnce(&mut NameGen) -> Name> = Box::new(|g| g.fresh("y"));
            bind_op(e, gen, t_slot, k)
        }
        Expr::Let(n, e1, e2) => bind(n.clone(), e1, gen, Box::new(move |g| norm(e2, g, k))),
        atom => k(gen, atom.clone()),
    }
}

/// Normalizes the operands of `e` (an add or mul), then names its result.
fn bind_op<'a>(
    e: &'a Expr,
    gen: &mut NameGen,
    name: Box<dyn FnOnce(&mut NameGen) -> Name + 'a>,
    k: K<'a>,
) -> Expr {
    let (a, b, is_add) = match e {
        Expr::Add(a, b) => (a, b, true),
        Expr::Mul(a, b) => (a, b, false),
        _ => unreachable!("bind_op on non-arithmetic node"),
    };
    norm(
        a,
        gen,
        Box::new(move |g, va| {
            norm(
                b,
                g,
                Box::new(move |g, vb| {
                    let t = name(g);
                    let op = if is_add {
                        Expr::add(va, vb)
                    } else {
                        Expr::mul(va, vb)
                    };
                    let rest = k(g, Expr::var(t.clone()));
                    Expr::let_(t, op, rest)
                }),
            )
        }),
    )
}

fn bind<'a>(
    name: Name,
    e: &'a Expr,
    gen: &mut NameGen,
    rest: Box<dyn FnOnce(&mut NameGen) -> Expr + 'a>,
) -> Expr {
    match e {
        Expr::Add(..) | Expr::Mul(..) => bind_op(
            e,
            gen,
            Box::new(move |_| name),
            Box::new(move |g, _| rest(g)),
        ),
        Expr::Let(m, e1, e2) => bind(
            m.clone(),
            e1,
            gen,
            Box::new(move |g| bind(name, e2, g, rest)),
        ),
        atom => {
            let body = rest(gen);
            Expr::let_(name, atom.clone(), body)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn cubic_chain() {
        let e = parse("(+ (* 2.0 x) (* (* x x) x))").unwrap();
        let want = parse(
            "(let _y0 (* 2.0 x) (let _y1 (* x x) (let _y2 (* _y1 x) \
             (let _y3 (+ _y0 _y2) _y3))))",
        )
        .unwrap();
        let got = anf(&e).unwrap();
        assert_eq!(got, want);
        assert!(is_anf(&got));
    }

    #[test]
    fn atoms_and_lets() {
        assert_eq!(anf(&Expr::var("x")).unwrap(), Expr::var("x"));
        let e = parse("(let y (* x x) y)").unwrap();
        assert_eq!(anf(&e).unwrap(), e);
        let nested = parse("(let a (let b (+ x 1.0) (* b b)) a)").unwrap();
        let want = parse("(let b (+ x 1.0) (let a (* b b) a))").unwrap();
        assert_eq!(anf(&nested).unwrap(), want);
    }

    #[test]
    fn rejects_control() {
        let e = parse("(+ x (app f x))").unwrap();
        assert_eq!(anf(&e), Err(AnfError::NonArithmetic("app")));
    }
}
