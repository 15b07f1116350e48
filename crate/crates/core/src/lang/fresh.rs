//! Fresh-name supply and the renamer that establishes unique binders.

use super::expr::{Expr, Name};
use std::collections::BTreeSet;

/// Supplies names of the shape `_<prefix><n>`. Renamed binders produced by
/// [`freshen`] always end in `_<n>`, so the two families never meet.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    next: u64,
}

fn generated_index(name: &str) -> Option<u64> {
    let rest = name.strip_prefix('_')?;
    let rest = rest.strip_suffix('\'').unwrap_or(rest);
    let letters = rest.chars().take_while(|c| c.is_ascii_lowercase()).count();
    let digits = &rest[letters..];
    if letters == 0 || digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

impl NameGen {
    pub fn new() -> Self {
        Self::default()
    }

    /// A generator whose names cannot clash with generated-shape names
    /// already present in `e`.
    pub fn for_expr(e: &Expr) -> Self {
        let next = e
            .all_names()
            .iter()
            .filter_map(|n| generated_index(n))
            .max()
            .map_or(0, |m| m + 1);
        NameGen { next }
    }

    pub fn fresh(&mut self, prefix: &str) -> Name {
        let n = self.next;
        self.next += 1;
        format!("_{prefix}{n}")
    }
}

fn base_of(name: &str) -> &str {
    let trimmed = name.trim_end_matches('\'');
    let trimmed = if trimmed.is_empty() { name } else { trimmed };
    if let Some(i) = trimmed.rfind('_') {
        let (head, tail) = (&trimmed[..i], &trimmed[i + 1..]);
        if !head.is_empty() && !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
            return head;
        }
    }
    trimmed
}

struct Renamer {
    counter: u64,
    avoid: BTreeSet<Name>,
    scope: Vec<(Name, Name)>,
}

impl Renamer {
    fn bind(&mut self, old: &str) -> Name {
        let base = base_of(old);
        loop {
            let candidate = format!("{base}_{}", self.counter);
            self.counter += 1;
            if !self.avoid.contains(&candidate) {
                self.scope.push((old.to_string(), candidate.clone()));
                return candidate;
            }
        }
    }

    fn lookup(&self, n: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(old, _)| old == n)
            .map_or_else(|| n.to_string(), |(_, new)| new.clone())
    }

    fn under(&mut self, old: &str, body: &Expr) -> (Name, Expr) {
        let new = self.bind(old);
        let body = self.go(body);
        self.scope.pop();
        (new, body)
    }

    fn go(&mut self, e: &Expr) -> Expr {
        use Expr::*;
        let mut r = |e: &Expr| Box::new(self.go(e));
        match e {
            Const(_) | Unit => e.clone(),
            Var(n) => Var(self.lookup(n)),
            Add(a, c) => Add(r(a), r(c)),
            Mul(a, c) => Mul(r(a), r(c)),
            Gt(a, c) => Gt(r(a), r(c)),
            App(a, c) => App(r(a), r(c)),
            Pair(a, c) => Pair(r(a), r(c)),
            Assign(a, c) => Assign(r(a), r(c)),
            Seq(a, c) => Seq(r(a), r(c)),
            If(a, c, d) => If(r(a), r(c), r(d)),
            Fst(a) => Fst(r(a)),
            Snd(a) => Snd(r(a)),
            Inl(a) => Inl(r(a)),
            Inr(a) => Inr(r(a)),
            Ref(a) => Ref(r(a)),
            Deref(a) => Deref(r(a)),
            Reset(a) => Reset(r(a)),
            Lam(p, body) => {
                let (p, body) = self.under(p, body);
                Lam(p, Box::new(body))
            }
            Shift(k, body) => {
                let (k, body) = self.under(k, body);
                Shift(k, Box::new(body))
            }
            Let(n, e1, e2) => {
                let e1 = self.go(e1);
                let (n, e2) = self.under(n, e2);
                Let(n, Box::new(e1), Box::new(e2))
            }
            Case(s, n1, e1, n2, e2) => {
                let s = self.go(s);
                let (n1, e1) = self.under(n1, e1);
                let (n2, e2) = self.under(n2, e2);
                Case(Box::new(s), n1, Box::new(e1), n2, Box::new(e2))
            }
            LetRec(f, x, body, rest) => {
                let f2 = self.bind(f);
                let (x2, body) = self.under(x, body);
                let rest = self.go(rest);
                self.scope.pop();
                LetRec(f2, x2, Box::new(body), Box::new(rest))
            }
        }
    }
}

/// Alpha-renames every binder to `base_<n>` with `n` drawn from a counter
/// starting at `seed`. Returns the renamed tree and the next counter value.
pub fn freshen_from(e: &Expr, seed: u64) -> (Expr, u64) {
    let mut r = Renamer {
        counter: seed,
        avoid: e.free_vars(),
        scope: Vec::new(),
    };
    let out = r.go(e);
    (out, r.counter)
}

pub fn freshen(e: &Expr) -> Expr {
    freshen_from(e, 0).0
}

/// Checks the unique-binder convention: binders pairwise distinct and
/// disjoint from the free names.
pub fn has_unique_binders(e: &Expr) -> bool {
    use Expr::*;
    let free = e.free_vars();
    let mut seen = BTreeSet::new();
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        let binders: Vec<&Name> = match e {
            Lam(n, _) | Let(n, _, _) | Shift(n, _) => vec![n],
            Case(_, a, _, c, _) | LetRec(a, c, _, _) => vec![a, c],
            _ => vec![],
        };
        for n in binders {
            if free.contains(n) || !seen.insert(n.clone()) {
                return false;
            }
        }
        stack.extend(e.children());
    }
    true
}

/// Equality up to consistent renaming of bound names.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    alpha_go(a, b, &mut Vec::new())
}

fn alpha_go<'e>(a: &'e Expr, b: &'e Expr, scope: &mut Vec<(&'e str, &'e str)>) -> bool {
    use Expr::*;
    let under = |scope: &mut Vec<(&'e str, &'e str)>,
                 binds: &[(&'e str, &'e str)],
                 x: &'e Expr,
                 y: &'e Expr| {
        scope.extend_from_slice(binds);
        let ok = alpha_go(x, y, scope);
        scope.truncate(scope.len() - binds.len());
        ok
    };
    match (a, b) {
        (Var(x), Var(y)) => {
            let bx = scope.iter().rev().position(|(l, _)| l == x);
            let by = scope.iter().rev().position(|(_, r)| r == y);
            match (bx, by) {
                (None, None) => x == y,
                (Some(i), Some(j)) => i == j,
                _ => false,
            }
        }
        (Const(x), Const(y)) => x.to_bits() == y.to_bits(),
        (Unit, Unit) => true,
        (Lam(x, e1), Lam(y, e2)) | (Shift(x, e1), Shift(y, e2)) => under(scope, &[(x, y)], e1, e2),
        (Let(x, r1, e1), Let(y, r2, e2)) => {
            alpha_go(r1, r2, scope) && under(scope, &[(x, y)], e1, e2)
        }
        (Case(s1, x1, a1, y1, b1), Case(s2, x2, a2, y2, b2)) => {
            alpha_go(s1, s2, scope)
                && under(scope, &[(x1, x2)], a1, a2)
                && under(scope, &[(y1, y2)], b1, b2)
        }
        (LetRec(f1, x1, a1, b1), LetRec(f2, x2, a2, b2)) => {
            under(scope, &[(f1, f2), (x1, x2)], a1, a2) && under(scope, &[(f1, f2)], b1, b2)
        }
        _ => {
            std::mem::discriminant(a) == std::mem::discriminant(b) && {
                let (ca, cb) = (a.children(), b.children());
                ca.len() == cb.len() && ca.iter().zip(cb).all(|(x, y)| alpha_go(x, y, scope))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn shadowing_is_resolved() {
        let e = parse("(lam x (lam x x))").unwrap();
        assert_eq!(freshen(&e), parse("(lam x_0 (lam x_1 x_1))").unwrap());
    }

    #[test]
    fn avoids_free_names() {
        let e = parse("(lam x (+ x x_0))").unwrap();
        let out = freshen(&e);
        assert_eq!(out, parse("(lam x_1 (+ x_1 x_0))").unwrap());
        assert!(has_unique_binders(&out));
    }

    #[test]
    fn strips_previous_suffix() {
        assert_eq!(base_of("y_12"), "y");
        assert_eq!(base_of("y'"), "y");
        assert_eq!(base_of("_k3"), "_k3");
        assert_eq!(base_of("_"), "_");
    }

    #[test]
    fn alpha_equivalence() {
        let p = |s: &str| parse(s).unwrap();
        assert!(alpha_eq(
            &p("(lam a (lam b (app a b)))"),
            &p("(lam x (lam y (app x y)))")
        ));
        assert!(!alpha_eq(
            &p("(lam a (lam b (app a b)))"),
            &p("(lam x (lam y (app y x)))")
        ));
        assert!(!alpha_eq(&p("(lam a z)"), &p("(lam a w)")));
        assert!(!alpha_eq(&p("(lam a (lam b a))"), &p("(lam x (lam x x))")));
        assert!(alpha_eq(
            &p("(let y 1.0 (case y l l r r))"),
            &p("(let q 1.0 (case q m m n n))")
        ));
    }

    #[test]
    fn generator_skips_existing_names() {
        let e = parse("(let _k4 1.0 _v2')").unwrap();
        let mut g = NameGen::for_expr(&e);
        assert_eq!(g.fresh("k"), "_k5");
    }
}
