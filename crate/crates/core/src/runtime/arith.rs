//! Compilation of arithmetic-fragment lambdas into a compact term that the
//! runtimes interpret.

use super::Number;
use crate::error::{expect_lambda, TransformError};
use crate::lang::Expr;

/// Variables are absolute positions in the evaluation environment; position
/// 0 is the input.
#[derive(Clone, Debug, PartialEq)]
pub enum ArithTerm {
    Const(f64),
    Var(usize),
    Add(Box<ArithTerm>, Box<ArithTerm>),
    Mul(Box<ArithTerm>, Box<ArithTerm>),
    /// Binds the value of the first term at the next position for the second.
    Let(Box<ArithTerm>, Box<ArithTerm>),
}

/// A one-argument function over the arithmetic fragment.
#[derive(Clone, Debug, PartialEq)]
pub struct ArithFn {
    pub body: ArithTerm,
}

impl ArithFn {
    pub fn compile(f: &Expr) -> Result<ArithFn, TransformError> {
        let (x, body) = expect_lambda(f)?;
        let mut scope = vec![x.to_string()];
        Ok(ArithFn {
            body: compile(body, &mut scope)?,
        })
    }

    /// Direct-style evaluation; operands are evaluated left to right.
    pub fn eval<N: Number>(&self, x: N) -> N {
        let mut env = vec![x];
        eval(&self.body, &mut env)
    }
}

fn compile(e: &Expr, scope: &mut Vec<String>) -> Result<ArithTerm, TransformError> {
    let b = Box::new;
    Ok(match e {
        Expr::Const(c) => ArithTerm::Const(*c),
        Expr::Var(n) => match scope.iter().rposition(|s| s == n) {
            Some(i) => ArithTerm::Var(i),
            None => return Err(TransformError::Unsupported("free variable")),
        },
        Expr::Add(a, c) => ArithTerm::Add(b(compile(a, scope)?), b(compile(c, scope)?)),
        Expr::Mul(a, c) => ArithTerm::Mul(b(compile(a, scope)?), b(compile(c, scope)?)),
        Expr::Let(n, e1, e2) => {
            let t1 = compile(e1, scope)?;
            scope.push(n.clone());
            let t2 = compile(e2, scope);
            scope.pop();
            ArithTerm::Let(b(t1), b(t2?))
        }
        other => return Err(TransformError::Unsupported(other.form_name())),
    })
}

fn eval<N: Number>(t: &ArithTerm, env: &mut Vec<N>) -> N {
    match t {
        ArithTerm::Const(c) => env[0].lift(*c),
        ArithTerm::Var(i) => env[*i].clone(),
        ArithTerm::Add(a, b) => {
            let va = eval(a, env);
            let vb = eval(b, env);
            va.add(&vb)
        }
        ArithTerm::Mul(a, b) => {
            let va = eval(a, env);
            let vb = eval(b, env);
            va.mul(&vb)
        }
        ArithTerm::Let(e1, e2) => {
            let v = eval(e1, env);
            env.push(v);
            let out = eval(e2, env);
            env.pop();
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn compiles_and_evaluates() {
        let f = ArithFn::compile(&parse("(lam x (let y (* x x) (+ y x)))").unwrap()).unwrap();
        assert_eq!(f.eval(3.0), 12.0);
        let err = ArithFn::compile(&parse("(lam x (app x x))").unwrap()).unwrap_err();
        assert_eq!(err, TransformError::Unsupported("app"));
    }
}
