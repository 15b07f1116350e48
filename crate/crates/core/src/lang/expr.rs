//! Abstract syntax of the core language.

use std::collections::BTreeSet;

pub type Name = String;

/// One alternative per production of the concrete grammar. `If`, `LetRec`
/// and `Seq` are surface sugar removed by [`crate::desugar`].
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Unit,
    Var(Name),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Gt(Box<Expr>, Box<Expr>),
    Lam(Name, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Let(Name, Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Inl(Box<Expr>),
    Inr(Box<Expr>),
    Case(Box<Expr>, Name, Box<Expr>, Name, Box<Expr>),
    Ref(Box<Expr>),
    Deref(Box<Expr>),
    Assign(Box<Expr>, Box<Expr>),
    Shift(Name, Box<Expr>),
    Reset(Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `letrec f = λx. body in rest`
    LetRec(Name, Name, Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(n: impl Into<Name>) -> Expr {
        Expr::Var(n.into())
    }
    pub fn add(a: Expr, c: Expr) -> Expr {
        Expr::Add(b(a), b(c))
    }
    pub fn mul(a: Expr, c: Expr) -> Expr {
        Expr::Mul(b(a), b(c))
    }
    pub fn gt(a: Expr, c: Expr) -> Expr {
        Expr::Gt(b(a), b(c))
    }
    pub fn lam(p: impl Into<Name>, body: Expr) -> Expr {
        Expr::Lam(p.into(), b(body))
    }
    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(b(f), b(a))
    }
    pub fn let_(n: impl Into<Name>, bound: Expr, body: Expr) -> Expr {
        Expr::Let(n.into(), b(bound), b(body))
    }
    pub fn pair(a: Expr, c: Expr) -> Expr {
        Expr::Pair(b(a), b(c))
    }
    pub fn fst(e: Expr) -> Expr {
        Expr::Fst(b(e))
    }
    pub fn snd(e: Expr) -> Expr {
        Expr::Snd(b(e))
    }
    pub fn inl(e: Expr) -> Expr {
        Expr::Inl(b(e))
    }
    pub fn inr(e: Expr) -> Expr {
        Expr::Inr(b(e))
    }
    pub fn case(s: Expr, n1: impl Into<Name>, e1: Expr, n2: impl Into<Name>, e2: Expr) -> Expr {
        Expr::Case(b(s), n1.into(), b(e1), n2.into(), b(e2))
    }
    pub fn ref_(e: Expr) -> Expr {
        Expr::Ref(b(e))
    }
    pub fn deref(e: Expr) -> Expr {
        Expr::Deref(b(e))
    }
    pub fn assign(c: Expr, v: Expr) -> Expr {
        Expr::Assign(b(c), b(v))
    }
    pub fn shift(k: impl Into<Name>, body: Expr) -> Expr {
        Expr::Shift(k.into(), b(body))
    }
    pub fn reset(e: Expr) -> Expr {
        Expr::Reset(b(e))
    }
    pub fn if_(c: Expr, t: Expr, f: Expr) -> Expr {
        Expr::If(b(c), b(t), b(f))
    }
    pub fn letrec(f: impl Into<Name>, x: impl Into<Name>, body: Expr, rest: Expr) -> Expr {
        Expr::LetRec(f.into(), x.into(), b(body), b(rest))
    }
    pub fn seq(a: Expr, c: Expr) -> Expr {
        Expr::Seq(b(a), b(c))
    }

    /// `cell += delta`, spelled with the core forms: `cell := !cell + delta`.
    pub fn accumulate(cell: Expr, delta: Expr) -> Expr {
        Expr::assign(cell.clone(), Expr::add(Expr::deref(cell), delta))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Var(_) | Expr::Unit)
    }

    /// Immediate subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        use Expr::*;
        match self {
            Const(_) | Unit | Var(_) => vec![],
            Add(a, c)
            | Mul(a, c)
            | Gt(a, c)
            | App(a, c)
            | Pair(a, c)
            | Assign(a, c)
            | Seq(a, c) => vec![a, c],
            Let(_, a, c) | LetRec(_, _, a, c) => vec![a, c],
            Lam(_, e)
            | Fst(e)
            | Snd(e)
            | Inl(e)
            | Inr(e)
            | Ref(e)
            | Deref(e)
            | Shift(_, e)
            | Reset(e) => vec![e],
            Case(s, _, e1, _, e2) => vec![s, e1, e2],
            If(c, t, f) => vec![c, t, f],
        }
    }

    /// Number of constructor nodes; binder names are not counted.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            n += 1;
            stack.extend(e.children());
        }
        n
    }

    /// True if any node satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if pred(e) {
                return true;
            }
            stack.extend(e.children());
        }
        false
    }

    pub fn has_control(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Shift(..) | Expr::Reset(_)))
    }

    pub fn has_sugar(&self) -> bool {
        self.any(&|e| matches!(e, Expr::If(..) | Expr::LetRec(..) | Expr::Seq(..)))
    }

    /// Name of the form at the root, as written in the concrete syntax.
    pub fn form_name(&self) -> &'static str {
        use Expr::*;
        match self {
            Const(_) => "constant",
            Unit => "unit",
            Var(_) => "variable",
            Add(..) => "+",
            Mul(..) => "*",
            Gt(..) => ">",
            Lam(..) => "lam",
            App(..) => "app",
            Let(..) => "let",
            Pair(..) => "pair",
            Fst(_) => "fst",
            Snd(_) => "snd",
            Inl(_) => "inl",
            Inr(_) => "inr",
            Case(..) => "case",
            Ref(_) => "ref",
            Deref(_) => "deref",
            Assign(..) => "assign",
            Shift(..) => "shift",
            Reset(_) => "reset",
            If(..) => "if",
            LetRec(..) => "letrec",
            Seq(..) => "seq",
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        free_into(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn occurs_free(&self, name: &str) -> bool {
        self.free_vars().contains(name)
    }

    /// Every name appearing in the tree, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        use Expr::*;
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Var(n) | Lam(n, _) | Let(n, _, _) | Shift(n, _) => {
                    out.insert(n.clone());
                }
                Case(_, a, _, c, _) | LetRec(a, c, _, _) => {
                    out.insert(a.clone());
                    out.insert(c.clone());
                }
                _ => {}
            }
            stack.extend(e.children());
        }
        out
    }

    /// Replaces free occurrences of `from` by the variable `to`. Assumes no
    /// binder in `self` captures `to`, which holds under unique naming.
    pub fn rename_free(&self, from: &str, to: &str) -> Expr {
        use Expr::*;
        let r = |e: &Expr| Box::new(e.rename_free(from, to));
        match self {
            Var(n) if n == from => Var(to.to_string()),
            Const(_) | Unit | Var(_) => self.clone(),
            Add(a, c) => Add(r(a), r(c)),
            Mul(a, c) => Mul(r(a), r(c)),
            Gt(a, c) => Gt(r(a), r(c)),
            App(a, c) => App(r(a), r(c)),
            Pair(a, c) => Pair(r(a), r(c)),
            Assign(a, c) => Assign(r(a), r(c)),
            Seq(a, c) => Seq(r(a), r(c)),
            Fst(e) => Fst(r(e)),
            Snd(e) => Snd(r(e)),
            Inl(e) => Inl(r(e)),
            Inr(e) => Inr(r(e)),
            Ref(e) => Ref(r(e)),
            Deref(e) => Deref(r(e)),
            Reset(e) => Reset(r(e)),
            Lam(p, body) if p == from => Lam(p.clone(), body.clone()),
            Lam(p, body) => Lam(p.clone(), r(body)),
            Shift(k, body) if k == from => Shift(k.clone(), body.clone()),
            Shift(k, body) => Shift(k.clone(), r(body)),
            Let(n, e1, e2) => {
                let e2 = if n == from { e2.clone() } else { r(e2) };
                Let(n.clone(), r(e1), e2)
            }
            Case(s, n1, e1, n2, e2) => {
                let e1 = if n1 == from { e1.clone() } else { r(e1) };
                let e2 = if n2 == from { e2.clone() } else { r(e2) };
                Case(r(s), n1.clone(), e1, n2.clone(), e2)
            }
            If(c, t, f) => If(r(c), r(t), r(f)),
            LetRec(f, x, body, rest) => {
                if f == from {
                    self.clone()
                } else {
                    let body = if x == from { body.clone() } else { r(body) };
                    LetRec(f.clone(), x.clone(), body, r(rest))
                }
            }
        }
    }
}

fn free_into(e: &Expr, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    use Expr::*;
    let under = |bound: &mut Vec<Name>, names: &[&Name], body: &Expr, out: &mut BTreeSet<Name>| {
        for n in names {
            bound.push((*n).clone());
        }
        free_into(body, bound, out);
        for _ in names {
            bound.pop();
        }
    };
    match e {
        Var(n) => {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        }
        Const(_) | Unit => {}
        Lam(p, body) | Shift(p, body) => under(bound, &[p], body, out),
        Let(n, e1, e2) => {
            free_into(e1, bound, out);
            under(bound, &[n], e2, out);
        }
        Case(s, n1, e1, n2, e2) => {
            free_into(s, bound, out);
            under(bound, &[n1], e1, out);
            under(bound, &[n2], e2, out);
        }
        LetRec(f, x, body, rest) => {
            under(bound, &[f, x], body, out);
            under(bound, &[f], rest, out);
        }
        _ => {
            for c in e.children() {
                free_into(c, bound, out);
            }
        }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&crate::lang::pretty(self))
    }
}
