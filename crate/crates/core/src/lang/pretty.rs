//! Printer producing the concrete S-expression syntax.

use super::expr::Expr;
use std::fmt::Write;

/// Formats a float so that it reads back as the same value and is never
/// mistaken for an identifier.
pub fn float_literal(v: f64) -> String {
    // Debug formatting is the shortest round-trip form and always keeps a
    // fraction or exponent, e.g. "2.0" or "1e300".
    format!("{v:?}")
}

pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    use Expr::*;
    match e {
        Const(v) => out.push_str(&float_literal(*v)),
        Unit => out.push_str("()"),
        Var(n) => out.push_str(n),
        Lam(n, body) | Shift(n, body) => {
            let _ = write!(out, "({} {} ", e.form_name(), n);
            write_expr(out, body);
            out.push(')');
        }
        Let(n, e1, e2) => {
            let _ = write!(out, "(let {n} ");
            write_expr(out, e1);
            out.push(' ');
            write_expr(out, e2);
            out.push(')');
        }
        Case(s, n1, e1, n2, e2) => {
            out.push_str("(case ");
            write_expr(out, s);
            let _ = write!(out, " {n1} ");
            write_expr(out, e1);
            let _ = write!(out, " {n2} ");
            write_expr(out, e2);
            out.push(')');
        }
        LetRec(f, x, body, rest) => {
            let _ = write!(out, "(letrec {f} (lam {x} ");
            write_expr(out, body);
            out.push_str(") ");
            write_expr(out, rest);
            out.push(')');
        }
        _ => {
            out.push('(');
            out.push_str(e.form_name());
            for c in e.children() {
                out.push(' ');
                write_expr(out, c);
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn prints_examples() {
        assert_eq!(
            pretty(&Expr::mul(Expr::Const(2.0), Expr::var("x"))),
            "(* 2.0 x)"
        );
        let s = Expr::shift("k", Expr::app(Expr::var("k"), Expr::Const(1.0)));
        assert_eq!(pretty(&s), "(shift k (app k 1.0))");
        assert_eq!(float_literal(-0.0), "-0.0");
        assert_eq!(float_literal(1e300), "1e300");
    }

    #[test]
    fn round_trips_sugar() {
        let src = "(letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) (seq () n))) (app f 8.0))";
        let e = parse(src).unwrap();
        assert_eq!(pretty(&e), src);
    }
}
