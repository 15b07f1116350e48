//! Purely functional reverse mode: continuations return an immutable map of
//! adjoint contributions instead of mutating cells, and ids are threaded
//! through explicitly.

use super::arith::{ArithFn, ArithTerm};
use super::cps::RevNum;
use super::Scalar;
use std::collections::BTreeMap;

/// Adjoints by number id; an absent key means zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdjointMap<S>(BTreeMap<usize, S>);

impl<S: Scalar> AdjointMap<S> {
    pub fn new() -> Self {
        AdjointMap(BTreeMap::new())
    }

    pub fn singleton(id: usize, v: S) -> Self {
        AdjointMap(BTreeMap::from([(id, v)]))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, S)>) -> Self {
        AdjointMap(pairs.into_iter().collect())
    }

    pub fn get(&self, id: usize) -> S {
        self.0.get(&id).copied().unwrap_or_else(S::zero)
    }

    /// The map with `delta` added to the entry for `id`.
    pub fn accumulate(mut self, id: usize, delta: S) -> Self {
        let v = self.get(id) + delta;
        self.0.insert(id, v);
        self
    }

    /// Pointwise sum.
    pub fn merge(&self, other: &Self) -> Self {
        other
            .0
            .iter()
            .fold(self.clone(), |m, (&id, &v)| m.accumulate(id, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, S)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }
}

/// Pure supply of fresh number ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ids {
    next: usize,
}

impl Ids {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num<S>(self, x: S) -> (RevNum<S>, Ids) {
        (
            RevNum { x, id: self.next },
            Ids {
                next: self.next + 1,
            },
        )
    }
}

pub type FKont<'k, S> = &'k dyn Fn(Ids, RevNum<S>) -> AdjointMap<S>;

pub fn add<S: Scalar>(ids: Ids, a: RevNum<S>, b: RevNum<S>, k: FKont<S>) -> AdjointMap<S> {
    let (y, ids) = ids.num(a.x + b.x);
    let m = k(ids, y);
    let yd = m.get(y.id);
    m.accumulate(a.id, yd).accumulate(b.id, yd)
}

pub fn mul<S: Scalar>(ids: Ids, a: RevNum<S>, b: RevNum<S>, k: FKont<S>) -> AdjointMap<S> {
    let (y, ids) = ids.num(a.x * b.x);
    let m = k(ids, y);
    let yd = m.get(y.id);
    m.accumulate(a.id, b.x * yd).accumulate(b.id, a.x * yd)
}

type EnvKont<'k, S> = &'k dyn Fn(Ids, &[RevNum<S>], RevNum<S>) -> AdjointMap<S>;

fn eval_term<S: Scalar>(
    t: &ArithTerm,
    ids: Ids,
    env: &[RevNum<S>],
    k: EnvKont<S>,
) -> AdjointMap<S> {
    match t {
        ArithTerm::Const(c) => {
            let (v, ids) = ids.num(S::constant(*c));
            k(ids, env, v)
        }
        ArithTerm::Var(i) => k(ids, env, env[*i]),
        ArithTerm::Add(a, b) | ArithTerm::Mul(a, b) => {
            let is_add = matches!(t, ArithTerm::Add(..));
            eval_term(a, ids, env, &|ids, env, va| {
                eval_term(b, ids, env, &|ids, env, vb| {
                    let rest = |ids, y| k(ids, env, y);
                    if is_add {
                        add(ids, va, vb, &rest)
                    } else {
                        mul(ids, va, vb, &rest)
                    }
                })
            })
        }
        ArithTerm::Let(e1, e2) => eval_term(e1, ids, env, &|ids, env, v| {
            let mut inner = env.to_vec();
            inner.push(v);
            eval_term(e2, ids, &inner, &|ids, _, y| k(ids, env, y))
        }),
    }
}

/// Runs `f` with a final continuation returning `{result: 1}` and reads the
/// input's entry from the map it produces.
pub fn grad_functional<S: Scalar>(
    f: impl FnOnce(Ids, RevNum<S>, FKont<S>) -> AdjointMap<S>,
    x0: S,
) -> S {
    let (z, ids) = Ids::new().num(x0);
    let m = f(ids, z, &|_, r| AdjointMap::singleton(r.id, S::one()));
    m.get(z.id)
}

pub fn grad_functional_fn(f: &ArithFn, x0: f64) -> f64 {
    grad_functional(
        |ids, x, k| eval_term(&f.body, ids, &[x], &|ids, _, y| k(ids, y)),
        x0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(grad_functional(|ids, x, k| mul(ids, x, x, k), 3.0), 6.0);
        assert_eq!(grad_functional(|ids, x, k| k(ids, x), 1.0), 1.0);
        let a = AdjointMap::from_pairs([(0, 1.0)]);
        let b = AdjointMap::from_pairs([(0, 2.0), (1, 3.0)]);
        assert_eq!(a.merge(&b), AdjointMap::from_pairs([(0, 3.0), (1, 3.0)]));
    }
}
