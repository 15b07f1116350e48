//! Reverse mode with explicit continuations: each operator computes its
//! result, hands it to the rest of the program, and accumulates adjoints
//! once that continuation returns.

use super::arith::{ArithFn, ArithTerm};
use super::Scalar;

/// A number participating in a reverse-mode run. `id` indexes the run's
/// adjoint store.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevNum<S> {
    pub x: S,
    pub id: usize,
}

/// One `+=` on an adjoint cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Update<S> {
    pub cell: usize,
    pub delta: S,
}

/// Per-run adjoint store, optionally recording every update in order.
#[derive(Debug)]
pub struct CpsRun<S> {
    adj: Vec<S>,
    trace: Option<Vec<Update<S>>>,
}

pub type Kont<'k, S> = &'k mut dyn FnMut(&mut CpsRun<S>, RevNum<S>);

type EnvKont<'k, S> = &'k mut dyn FnMut(&mut CpsRun<S>, &mut Vec<RevNum<S>>, RevNum<S>);

impl<S: Scalar> Default for CpsRun<S> {
    fn default() -> Self {
        CpsRun {
            adj: Vec::new(),
            trace: None,
        }
    }
}

impl<S: Scalar> CpsRun<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracing() -> Self {
        CpsRun {
            adj: Vec::new(),
            trace: Some(Vec::new()),
        }
    }

    pub fn var(&mut self, x: S) -> RevNum<S> {
        self.adj.push(S::zero());
        RevNum {
            x,
            id: self.adj.len() - 1,
        }
    }

    pub fn constant(&mut self, c: f64) -> RevNum<S> {
        self.var(S::constant(c))
    }

    pub fn adjoint(&self, n: RevNum<S>) -> S {
        self.adj[n.id]
    }

    pub fn set_adjoint(&mut self, n: RevNum<S>, v: S) {
        self.adj[n.id] = v;
    }

    pub fn trace(&self) -> Option<&[Update<S>]> {
        self.trace.as_deref()
    }

    fn accumulate(&mut self, cell: usize, delta: S) {
        self.adj[cell] = self.adj[cell] + delta;
        if let Some(t) = &mut self.trace {
            t.push(Update { cell, delta });
        }
    }

    pub fn add(&mut self, a: RevNum<S>, b: RevNum<S>, k: Kont<S>) {
        let y = self.var(a.x + b.x);
        k(self, y);
        let yd = self.adj[y.id];
        self.accumulate(a.id, yd);
        self.accumulate(b.id, yd);
    }

    pub fn mul(&mut self, a: RevNum<S>, b: RevNum<S>, k: Kont<S>) {
        let y = self.var(a.x * b.x);
        k(self, y);
        let yd = self.adj[y.id];
        self.accumulate(a.id, b.x * yd);
        self.accumulate(b.id, a.x * yd);
    }

    /// Runs a compiled function on `x` in continuation-passing style.
    pub fn eval(&mut self, f: &ArithFn, x: RevNum<S>, k: Kont<S>) {
        let mut env = vec![x];
        self.eval_term(&f.body, &mut env, &mut |s, _, y| k(s, y));
    }

    fn eval_term(&mut self, t: &ArithTerm, env: &mut Vec<RevNum<S>>, k: EnvKont<S>) {
        match t {
            ArithTerm::Const(c) => {
                let v = self.constant(*c);
                k(self, env, v)
            }
            ArithTerm::Var(i) => {
                let v = env[*i];
                k(self, env, v)
            }
            ArithTerm::Add(a, b) | ArithTerm::Mul(a, b) => {
                let is_add = matches!(t, ArithTerm::Add(..));
                self.eval_term(a, env, &mut |s, env, va| {
                    s.eval_term(b, env, &mut |s, env, vb| {
                        let mut rest = |s: &mut CpsRun<S>, y| k(s, env, y);
                        if is_add {
                            s.add(va, vb, &mut rest)
                        } else {
                            s.mul(va, vb, &mut rest)
                        }
                    })
                })
            }
            ArithTerm::Let(e1, e2) => self.eval_term(e1, env, &mut |s, env, v| {
                // The binding is out of scope for the continuation.
                env.push(v);
                s.eval_term(e2, env, &mut |s, env, y| {
                    let inner = env.pop().expect("let binding");
                    k(s, env, y);
                    env.push(inner);
                });
                env.pop();
            }),
        }
    }
}

/// Calls `f` on a fresh input with a final continuation that seeds the
/// result adjoint with 1, then returns the input adjoint.
pub fn grad_cps<S: Scalar>(f: impl FnOnce(&mut CpsRun<S>, RevNum<S>, Kont<S>), x0: S) -> S {
    grad_cps_in(&mut CpsRun::new(), f, x0)
}

pub fn grad_cps_in<S: Scalar>(
    run: &mut CpsRun<S>,
    f: impl FnOnce(&mut CpsRun<S>, RevNum<S>, Kont<S>),
    x0: S,
) -> S {
    let z = run.var(x0);
    f(run, z, &mut |run, r| run.set_adjoint(r, S::one()));
    run.adjoint(z)
}

pub fn grad_cps_fn(f: &ArithFn, x0: f64) -> f64 {
    grad_cps(|run, x, k| run.eval(f, x, k), x0)
}
