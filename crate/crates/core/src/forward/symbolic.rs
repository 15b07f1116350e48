//! Symbolic differentiation of ANF terms, with the let rule that splits each
//! binding into a primal and a tangent binding.

use crate::error::TransformError;
use crate::lang::{anf, is_anf, Expr, Name};

/// A primal name paired with the name of its tangent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffVar {
    pub primal: Name,
    pub tangent: Name,
}

impl DiffVar {
    pub const SUFFIX: char = '\'';

    pub fn of(primal: &str) -> DiffVar {
        DiffVar {
            primal: primal.to_string(),
            tangent: format!("{primal}{}", Self::SUFFIX),
        }
    }
}

/// `d/d(wrt)` of an ANF term. No simplification is performed.
pub fn symbolic_diff(e: &Expr, wrt: &str) -> Result<Expr, TransformError> {
    if !is_anf(e) || matches!(e, Expr::Lam(..)) {
        return Err(TransformError::NotAnf);
    }
    Ok(d(e, wrt))
}

fn d(e: &Expr, wrt: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(y) if y == wrt => Expr::Const(1.0),
        Expr::Var(y) => Expr::var(DiffVar::of(y).tangent),
        Expr::Add(a, b) => Expr::add(d(a, wrt), d(b, wrt)),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(d(a, wrt), (**b).clone()),
            Expr::mul((**a).clone(), d(b, wrt)),
        ),
        Expr::Let(y, e1, e2) => Expr::let_(
            y.clone(),
            (**e1).clone(),
            Expr::let_(DiffVar::of(y).tangent, d(e1, wrt), d(e2, wrt)),
        ),
        _ => unreachable!("checked by is_anf"),
    }
}

/// `λx. d/dx anf(body)` for a one-argument lambda over the arithmetic
/// fragment.
pub fn symbolic_gradient(f: &Expr) -> Result<Expr, crate::Error> {
    let (x, body) = crate::error::expect_lambda(f)?;
    let normal = anf(body)?;
    Ok(Expr::lam(x, symbolic_diff(&normal, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{apply_real, parse};

    #[test]
    fn eight_let_program() {
        let chain =
            parse("(let y1 (* 2.0 x) (let y2 (* x x) (let y3 (* y2 x) (let y (+ y1 y3) y))))")
                .unwrap();
        let out = symbolic_diff(&chain, "x").unwrap();
        let want = parse(
            "(let y1 (* 2.0 x) (let y1' (+ (* 0.0 x) (* 2.0 1.0)) \
             (let y2 (* x x) (let y2' (+ (* 1.0 x) (* x 1.0)) \
             (let y3 (* y2 x) (let y3' (+ (* y2' x) (* y2 1.0)) \
             (let y (+ y1 y3) (let y' (+ y1' y3') y'))))))))",
        )
        .unwrap();
        assert_eq!(out, want);
        assert_eq!(apply_real(&Expr::lam("x", out), 2.0).unwrap(), 14.0);
    }

    #[test]
    fn base_rules() {
        assert_eq!(
            symbolic_diff(&Expr::var("x"), "x").unwrap(),
            Expr::Const(1.0)
        );
        assert_eq!(
            symbolic_diff(&Expr::Const(4.0), "x").unwrap(),
            Expr::Const(0.0)
        );
        let nested = parse("(+ (* x x) x)").unwrap();
        assert_eq!(symbolic_diff(&nested, "x"), Err(TransformError::NotAnf));
    }
}
