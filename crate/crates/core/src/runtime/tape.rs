//! Tape-based reverse mode: the forward pass records one entry per
//! operation and the backward pass replays them in reverse.

use super::arith::ArithFn;
use super::cps::Update;
use super::dual::Dual;
use super::{Number, OpKind, Scalar};
use std::cell::RefCell;

/// A recorded operation with the primals its backward step needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TapeEntry<S> {
    pub op: OpKind,
    pub lhs: usize,
    pub rhs: usize,
    pub out: usize,
    pub lhs_x: S,
    pub rhs_x: S,
}

#[derive(Clone, Debug)]
pub struct Tape<S> {
    pub entries: Vec<TapeEntry<S>>,
    adj: Vec<S>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Tape {
            entries: Vec::new(),
            adj: Vec::new(),
        }
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self) -> usize {
        self.adj.push(S::zero());
        self.adj.len() - 1
    }

    pub fn adjoint(&self, id: usize) -> S {
        self.adj[id]
    }

    pub fn set_adjoint(&mut self, id: usize, v: S) {
        self.adj[id] = v;
    }

    /// Plays the entries back in reverse insertion order, optionally
    /// recording each adjoint update.
    pub fn replay(&mut self, mut trace: Option<&mut Vec<Update<S>>>) {
        for i in (0..self.entries.len()).rev() {
            let e = self.entries[i];
            let yd = self.adj[e.out];
            let (dl, dr) = match e.op {
                OpKind::Add => (yd, yd),
                OpKind::Mul => (e.rhs_x * yd, e.lhs_x * yd),
            };
            for (cell, delta) in [(e.lhs, dl), (e.rhs, dr)] {
                self.adj[cell] = self.adj[cell] + delta;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(Update { cell, delta });
                }
            }
        }
    }
}

/// A number whose operations are recorded on a shared per-run tape.
#[derive(Clone, Debug)]
pub struct TapeVar<'t, S> {
    pub x: S,
    pub id: usize,
    tape: &'t RefCell<Tape<S>>,
}

impl<'t, S: Scalar> TapeVar<'t, S> {
    pub fn new(tape: &'t RefCell<Tape<S>>, x: S) -> Self {
        let id = tape.borrow_mut().alloc();
        TapeVar { x, id, tape }
    }

    fn record(&self, op: OpKind, other: &Self, x: S) -> Self {
        let out = TapeVar::new(self.tape, x);
        self.tape.borrow_mut().entries.push(TapeEntry {
            op,
            lhs: self.id,
            rhs: other.id,
            out: out.id,
            lhs_x: self.x,
            rhs_x: other.x,
        });
        out
    }
}

impl<S: Scalar> Number for TapeVar<'_, S> {
    fn lift(&self, c: f64) -> Self {
        TapeVar::new(self.tape, S::constant(c))
    }
    fn add(&self, other: &Self) -> Self {
        self.record(OpKind::Add, other, self.x + other.x)
    }
    fn mul(&self, other: &Self) -> Self {
        self.record(OpKind::Mul, other, self.x * other.x)
    }
}

/// Forward pass, seed the result adjoint with 1, replay, read the input
/// adjoint.
pub fn grad_tape<S: Scalar>(f: impl for<'t> FnOnce(TapeVar<'t, S>) -> TapeVar<'t, S>, x0: S) -> S {
    grad_tape_traced(f, x0, None)
}

pub fn grad_tape_traced<S: Scalar>(
    f: impl for<'t> FnOnce(TapeVar<'t, S>) -> TapeVar<'t, S>,
    x0: S,
    trace: Option<&mut Vec<Update<S>>>,
) -> S {
    let tape = RefCell::new(Tape::new());
    let z = TapeVar::new(&tape, x0);
    let zid = z.id;
    let y = f(z);
    let mut t = tape.borrow_mut();
    t.set_adjoint(y.id, S::one());
    t.replay(trace);
    t.adjoint(zid)
}

pub fn grad_tape_fn(f: &ArithFn, x0: f64) -> f64 {
    grad_tape(|x| f.eval(x), x0)
}

/// Second derivative: the tape runs over dual numbers seeded with tangent 1,
/// so the input adjoint's tangent is `f''(x0)`.
pub fn grad_forward_over_reverse(f: &ArithFn, x0: f64) -> f64 {
    grad_tape(|x| f.eval(x), Dual::new(x0, 1.0)).d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn examples() {
        assert_eq!(grad_tape(|x| x.mul(&x), 3.0), 6.0);
        fn cubic(x: TapeVar<'_, f64>) -> TapeVar<'_, f64> {
            let two = x.lift(2.0);
            two.mul(&x).add(&x.mul(&x).mul(&x))
        }
        assert_eq!(grad_tape(cubic, 1.0), 5.0);
        let mut empty: Tape<f64> = Tape::new();
        let id = empty.alloc();
        empty.replay(None);
        assert_eq!(empty.adjoint(id), 0.0);
    }

    #[test]
    fn second_derivative() {
        let f = ArithFn::compile(&parse("(lam x (+ (* 2.0 x) (* (* x x) x)))").unwrap()).unwrap();
        assert_eq!(grad_forward_over_reverse(&f, 1.0), 6.0);
        let sq = ArithFn::compile(&parse("(lam x (* x x))").unwrap()).unwrap();
        assert_eq!(grad_forward_over_reverse(&sq, -7.5), 2.0);
    }
}
