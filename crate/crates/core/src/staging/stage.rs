//! Translation-time reverse mode that emits IR. The stager is the meta-CPS
//! reverse translation with code generation in place of syntax building:
//! arithmetic emits its forward step, runs the continuation, then emits the
//! backward step; `if` shares its continuation through a named function;
//! loops become tail-recursive functions with the continuation contified.

use super::ir::*;
use super::IrError;
use crate::lang::{freshen, Expr};
use std::cell::Cell as StdCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

pub type Block = Vec<IrStmt>;

/// Statically inlined applications allowed per program.
const INLINE_LIMIT: usize = 10_000;

/// A translation-time value.
#[derive(Clone)]
pub(crate) enum SVal<'a> {
    /// Primal operand and adjoint cell; constants have no cell.
    Num(Operand, Option<Sym>),
    Bool(Operand),
    Unit,
    Pair(Rc<(SVal<'a>, SVal<'a>)>),
    Fun(Rc<StaticFn<'a>>),
    /// A contified loop: calls to it are tail calls.
    Loop(String),
    /// A recursive function in CPS.
    Rec(String),
}

pub(crate) struct StaticFn<'a> {
    param: &'a str,
    body: &'a Expr,
    env: SEnv<'a>,
}

impl SVal<'_> {
    fn describe(&self) -> &'static str {
        match self {
            SVal::Num(..) => "number",
            SVal::Bool(_) => "boolean",
            SVal::Unit => "unit",
            SVal::Pair(_) => "pair",
            SVal::Fun(_) | SVal::Loop(_) | SVal::Rec(_) => "function",
        }
    }
}

#[derive(Clone, Default)]
pub(crate) struct SEnv<'a>(Option<Rc<(&'a str, SVal<'a>, SEnv<'a>)>>);

impl<'a> SEnv<'a> {
    pub(crate) fn extend(&self, name: &'a str, v: SVal<'a>) -> Self {
        SEnv(Some(Rc::new((name, v, self.clone()))))
    }

    fn lookup(&self, name: &str) -> Option<&SVal<'a>> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if node.0 == name {
                return Some(&node.1);
            }
            cur = &node.2;
        }
        None
    }
}

pub(crate) type Kappa<'a> = Box<dyn FnOnce(&mut Stager, SVal<'a>) -> Result<Block, IrError> + 'a>;

pub(crate) struct Stager {
    next: usize,
    kinds: BTreeMap<Sym, Kind>,
    functions: Vec<(usize, IrFunction)>,
    inlined: usize,
}

impl Stager {
    pub(crate) fn new() -> Self {
        let mut kinds = BTreeMap::new();
        kinds.insert(IN.to_string(), Kind::Val);
        kinds.insert(D0.to_string(), Kind::Cell);
        Stager {
            next: 1,
            kinds,
            functions: Vec::new(),
            inlined: 0,
        }
    }

    pub(crate) fn fresh(&mut self, prefix: &str, kind: Kind) -> Sym {
        let s = format!("{prefix}{}", self.next);
        self.next += 1;
        self.kinds.insert(s.clone(), kind);
        s
    }

    pub(crate) fn set_kind(&mut self, sym: &str, kind: Kind) {
        self.kinds.insert(sym.to_string(), kind);
    }

    /// Reserves a function name; returns it with its ordering key.
    pub(crate) fn fresh_fn(&mut self, prefix: &str) -> (String, usize) {
        let n = self.next;
        self.next += 1;
        (format!("{prefix}{n}"), n)
    }

    pub(crate) fn push_fn(&mut self, key: usize, f: IrFunction) {
        self.functions.push((key, f));
    }

    /// `(primal, cell)` for passing a number to a function, allocating a
    /// cell for constants.
    pub(crate) fn as_arg(&mut self, v: SVal<'_>) -> Result<(Operand, Sym, Block), IrError> {
        match v {
            SVal::Num(x, Some(d)) => Ok((x, d, vec![])),
            SVal::Num(x, None) => {
                let d = self.fresh("d", Kind::Cell);
                Ok((
                    x,
                    d.clone(),
                    vec![IrStmt::CellNew {
                        sym: d,
                        init: Operand::Lit(0.0),
                    }],
                ))
            }
            other => Err(IrError::NotANumber(other.describe())),
        }
    }

    pub(crate) fn translate<'a>(
        &mut self,
        e: &'a Expr,
        env: SEnv<'a>,
        k: Kappa<'a>,
    ) -> Result<Block, IrError> {
        use Expr::*;
        match e {
            Const(c) => k(self, SVal::Num(Operand::Lit(*c), None)),
            Unit => k(self, SVal::Unit),
            Var(y) => match env.lookup(y) {
                Some(v) => k(self, v.clone()),
                None => Err(IrError::Unbound(y.clone())),
            },
            Add(a, b) => self.arith(IrOp::Add, a, b, env, k),
            Mul(a, b) => self.arith(IrOp::Mul, a, b, env, k),
            Gt(a, b) => self.arith(IrOp::Gt, a, b, env, k),
            Lam(p, body) => k(
                self,
                SVal::Fun(Rc::new(StaticFn {
                    param: p,
                    body,
                    env,
                })),
            ),
            App(f, a) => {
                let env2 = env.clone();
                self.translate(
                    f,
                    env,
                    Box::new(move |st, vf| {
                        st.translate(a, env2, Box::new(move |st, va| st.apply(vf, va, k)))
                    }),
                )
            }
            Let(y, r, b) => {
                let env2 = env.clone();
                self.translate(
                    r,
                    env,
                    Box::new(move |st, v| st.translate(b, env2.extend(y, v), k)),
                )
            }
            Seq(a, b) => {
                let env2 = env.clone();
                self.translate(a, env, Box::new(move |st, _| st.translate(b, env2, k)))
            }
            Pair(a, b) => {
                let env2 = env.clone();
                self.translate(
                    a,
                    env,
                    Box::new(move |st, va| {
                        st.translate(
                            b,
                            env2,
                            Box::new(move |st, vb| k(st, SVal::Pair(Rc::new((va, vb))))),
                        )
                    }),
                )
            }
            Fst(a) | Snd(a) => {
                let first = matches!(e, Fst(_));
                self.translate(
                    a,
                    env,
                    Box::new(move |st, v| match v {
                        SVal::Pair(p) => k(st, if first { p.0.clone() } else { p.1.clone() }),
                        other => Err(IrError::NotAPair(other.describe())),
                    }),
                )
            }
            If(c, t, f) => {
                let env2 = env.clone();
                self.translate(
                    c,
                    env,
                    Box::new(move |st, vc| match vc {
                        SVal::Bool(g) => st.if_rule(g, t, f, env2, k),
                        other => Err(IrError::NotABool(other.describe())),
                    }),
                )
            }
            LetRec(f, x, body, rest) => self.letrec(f, x, body, rest, env, k),
            Inl(_) | Inr(_) | Case(..) | Ref(_) | Deref(_) | Assign(..) | Shift(..) | Reset(_) => {
                Err(IrError::Unsupported(e.form_name()))
            }
        }
    }

    fn arith<'a>(
        &mut self,
        op: IrOp,
        a: &'a Expr,
        b: &'a Expr,
        env: SEnv<'a>,
        k: Kappa<'a>,
    ) -> Result<Block, IrError> {
        let env2 = env.clone();
        self.translate(
            a,
            env,
            Box::new(move |st, va| {
                st.translate(
                    b,
                    env2,
                    Box::new(move |st, vb| st.arith_step(op, va, vb, k)),
                )
            }),
        )
    }

    /// `v = x1 op x2; dv = ref 0; k(v, dv); c1 += ..; c2 += ..`
    fn arith_step<'a>(
        &mut self,
        op: IrOp,
        va: SVal<'a>,
        vb: SVal<'a>,
        k: Kappa<'a>,
    ) -> Result<Block, IrError> {
        let (SVal::Num(x1, c1), SVal::Num(x2, c2)) = (&va, &vb) else {
            let bad = if matches!(va, SVal::Num(..)) {
                &vb
            } else {
                &va
            };
            return Err(IrError::NotANumber(bad.describe()));
        };
        if op == IrOp::Gt {
            let g = self.fresh("g", Kind::Val);
            let mut out = vec![IrStmt::Bind {
                sym: g.clone(),
                op,
                lhs: x1.clone(),
                rhs: x2.clone(),
            }];
            out.extend(k(self, SVal::Bool(Operand::sym(g)))?);
            return Ok(out);
        }
        let v = self.fresh("v", Kind::Val);
        let d = self.fresh("d", Kind::Cell);
        let mut out = vec![
            IrStmt::Bind {
                sym: v.clone(),
                op,
                lhs: x1.clone(),
                rhs: x2.clone(),
            },
            IrStmt::CellNew {
                sym: d.clone(),
                init: Operand::Lit(0.0),
            },
        ];
        let (x1, c1, x2, c2) = (x1.clone(), c1.clone(), x2.clone(), c2.clone());
        out.extend(k(self, SVal::Num(Operand::sym(v), Some(d.clone())))?);
        if c1.is_none() && c2.is_none() {
            return Ok(out);
        }
        let t = self.fresh("t", Kind::Val);
        out.push(IrStmt::CellRead {
            sym: t.clone(),
            cell: d,
        });
        for (cell, other) in [(c1, x2), (c2, x1)] {
            let Some(cell) = cell else { continue };
            let delta = match op {
                IrOp::Add => Operand::sym(t.clone()),
                _ => {
                    let u = self.fresh("u", Kind::Val);
                    out.push(IrStmt::Bind {
                        sym: u.clone(),
                        op: IrOp::Mul,
                        lhs: Operand::sym(t.clone()),
                        rhs: other,
                    });
                    Operand::sym(u)
                }
            };
            out.push(IrStmt::CellAccum { cell, value: delta });
        }
        Ok(out)
    }

    fn apply<'a>(&mut self, vf: SVal<'a>, va: SVal<'a>, k: Kappa<'a>) -> Result<Block, IrError> {
        match vf {
            SVal::Fun(f) => {
                self.inlined += 1;
                if self.inlined > INLINE_LIMIT {
                    return Err(IrError::InlineLimit(INLINE_LIMIT));
                }
                let env = f.env.extend(f.param, va);
                self.translate(f.body, env, k)
            }
            SVal::Loop(name) => {
                let (x, d, mut out) = self.as_arg(va)?;
                out.push(IrStmt::Call {
                    callee: Callee::Fn(name),
                    args: vec![Arg::Val(x), Arg::Cell(d)],
                });
                Ok(out)
            }
            SVal::Rec(name) => {
                let (x, d, mut out) = self.as_arg(va)?;
                let kf = self.lift(k)?;
                let kv = self.fresh("k", Kind::Kont);
                out.push(IrStmt::MakeKont {
                    sym: kv.clone(),
                    func: kf,
                    captures: vec![],
                });
                out.push(IrStmt::Call {
                    callee: Callee::Fn(name),
                    args: vec![Arg::Val(x), Arg::Cell(d), Arg::Kont(kv)],
                });
                Ok(out)
            }
            other => Err(IrError::NotAFunction(other.describe())),
        }
    }

    /// Emits `k` as a function of `(x, &d)` and returns its name.
    pub(crate) fn lift<'a>(&mut self, k: Kappa<'a>) -> Result<String, IrError> {
        let (name, key) = self.fresh_fn("k");
        self.define_kont(name.clone(), key, k)?;
        Ok(name)
    }

    fn define_kont<'a>(&mut self, name: String, key: usize, k: Kappa<'a>) -> Result<(), IrError> {
        let x = self.fresh("x", Kind::Val);
        let d = self.fresh("d", Kind::Cell);
        let body = k(self, SVal::Num(Operand::sym(x.clone()), Some(d.clone())))?;
        let params = vec![Param::new(Kind::Val, x), Param::new(Kind::Cell, d)];
        self.push_fn(key, IrFunction { name, params, body });
        Ok(())
    }

    fn if_rule<'a>(
        &mut self,
        guard: Operand,
        t: &'a Expr,
        f: &'a Expr,
        env: SEnv<'a>,
        k: Kappa<'a>,
    ) -> Result<Block, IrError> {
        let (kname, key) = self.fresh_fn("k");
        let uses = Rc::new(StdCell::new(0usize));
        let branch = |st: &mut Stager, e: &'a Expr, env: SEnv<'a>| {
            let (uses, kname) = (uses.clone(), kname.clone());
            st.translate(
                e,
                env,
                Box::new(move |st, v| {
                    uses.set(uses.get() + 1);
                    let (x, d, mut out) = st.as_arg(v)?;
                    out.push(IrStmt::Call {
                        callee: Callee::Fn(kname),
                        args: vec![Arg::Val(x), Arg::Cell(d)],
                    });
                    Ok(out)
                }),
            )
        };
        let then_ = branch(self, t, env.clone())?;
        let else_ = branch(self, f, env)?;
        let mut out = vec![IrStmt::Cond {
            guard,
            then_,
            else_,
        }];
        let mut k = Some(k);
        if uses.get() == 1 {
            splice_call(self, &mut out, &kname, &mut k)?;
        }
        // A use left inside another function's body is served by a
        // function, like two uses are.
        if let Some(k) = k.filter(|_| uses.get() > 0) {
            self.define_kont(kname, key, k)?;
        }
        Ok(out)
    }

    fn letrec<'a>(
        &mut self,
        f: &'a str,
        x: &'a str,
        body: &'a Expr,
        rest: &'a Expr,
        env: SEnv<'a>,
        k: Kappa<'a>,
    ) -> Result<Block, IrError> {
        if let Some(arg) = loop_argument(f, body, rest) {
            let env2 = env.clone();
            return self.translate(
                arg,
                env,
                Box::new(move |st, va| {
                    let (x0, d0, mut out) = st.as_arg(va)?;
                    let (name, key) = st.fresh_fn("loop");
                    let xs = st.fresh("x", Kind::Val);
                    let ds = st.fresh("d", Kind::Cell);
                    let benv = env2
                        .extend(f, SVal::Loop(name.clone()))
                        .extend(x, SVal::Num(Operand::sym(xs.clone()), Some(ds.clone())));
                    let fbody = st.translate(body, benv, k)?;
                    let params = vec![Param::new(Kind::Val, xs), Param::new(Kind::Cell, ds)];
                    st.push_fn(
                        key,
                        IrFunction {
                            name: name.clone(),
                            params,
                            body: fbody,
                        },
                    );
                    out.push(IrStmt::Call {
                        callee: Callee::Fn(name),
                        args: vec![Arg::Val(x0), Arg::Cell(d0)],
                    });
                    Ok(out)
                }),
            );
        }
        let (name, key) = self.fresh_fn("rec");
        let xs = self.fresh("x", Kind::Val);
        let ds = self.fresh("d", Kind::Cell);
        let ks = self.fresh("k", Kind::Kont);
        let fenv = env.extend(f, SVal::Rec(name.clone()));
        let benv = fenv
            .clone()
            .extend(x, SVal::Num(Operand::sym(xs.clone()), Some(ds.clone())));
        let ks2 = ks.clone();
        let fbody = self.translate(
            body,
            benv,
            Box::new(move |st, v| {
                let (xr, dr, mut out) = st.as_arg(v)?;
                out.push(IrStmt::Call {
                    callee: Callee::Kont(ks2),
                    args: vec![Arg::Val(xr), Arg::Cell(dr)],
                });
                Ok(out)
            }),
        )?;
        let params = vec![
            Param::new(Kind::Val, xs),
            Param::new(Kind::Cell, ds),
            Param::new(Kind::Kont, ks),
        ];
        self.push_fn(
            key,
            IrFunction {
                name,
                params,
                body: fbody,
            },
        );
        self.translate(rest, fenv, k)
    }

    /// Orders the functions, closure-converts, and assembles the program.
    pub(crate) fn finish(mut self, entry: IrFunction) -> Result<IrProgram, IrError> {
        self.functions.sort_by_key(|(key, _)| *key);
        let functions = self.functions.into_iter().map(|(_, f)| f).collect();
        closure_convert(IrProgram { functions, entry }, &self.kinds)
    }
}

/// Replaces the single call to `kname` in `block` by the code of `k`.
fn splice_call<'a>(
    st: &mut Stager,
    block: &mut Block,
    kname: &str,
    k: &mut Option<Kappa<'a>>,
) -> Result<bool, IrError> {
    for i in 0..block.len() {
        if let IrStmt::Call {
            callee: Callee::Fn(n),
            args,
        } = &block[i]
        {
            if n == kname {
                let (Arg::Val(x), Arg::Cell(d)) = (&args[0], &args[1]) else {
                    unreachable!("continuation calls pass (value, cell)")
                };
                let v = SVal::Num(x.clone(), Some(d.clone()));
                let code = (k.take().expect("spliced once"))(st, v)?;
                block.splice(i..=i, code);
                return Ok(true);
            }
        }
        for b in block[i].blocks_mut() {
            if splice_call(st, b, kname, k)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// If `letrec f = λx. body in rest` is a loop, the argument of its single
/// entry call. A loop is entered exactly once, as `rest = f arg`, and
/// every use of `f` in `body` is a call in tail position.
pub(crate) fn loop_argument<'a>(f: &str, body: &Expr, rest: &'a Expr) -> Option<&'a Expr> {
    let Expr::App(head, arg) = rest else {
        return None;
    };
    if !matches!(&**head, Expr::Var(h) if h == f) || arg.occurs_free(f) {
        return None;
    }
    calls_only_in_tail(f, body).then_some(&**arg)
}

fn calls_only_in_tail(f: &str, e: &Expr) -> bool {
    match e {
        Expr::App(head, arg) if matches!(&**head, Expr::Var(h) if h == f) => !arg.occurs_free(f),
        Expr::If(c, t, el) => {
            !c.occurs_free(f) && calls_only_in_tail(f, t) && calls_only_in_tail(f, el)
        }
        Expr::Let(y, r, b) => !r.occurs_free(f) && (y == f || calls_only_in_tail(f, b)),
        Expr::Seq(a, b) => !a.occurs_free(f) && calls_only_in_tail(f, b),
        other => !other.occurs_free(f),
    }
}

/// Turns every free symbol of a function into an extra parameter and
/// passes it at each call site and continuation construction.
fn closure_convert(mut p: IrProgram, kinds: &BTreeMap<Sym, Kind>) -> Result<IrProgram, IrError> {
    let mut extra: BTreeMap<String, BTreeSet<Sym>> = BTreeMap::new();
    let mut local: BTreeMap<String, BTreeSet<Sym>> = BTreeMap::new();
    for f in p.all_functions() {
        let mut bound: BTreeSet<Sym> = f.params.iter().map(|q| q.sym.clone()).collect();
        walk(&f.body, &mut |s| {
            bound.extend(s.defs().into_iter().map(str::to_string))
        });
        local.insert(f.name.clone(), bound);
        extra.insert(f.name.clone(), f.free_syms());
    }
    loop {
        let mut changed = false;
        for f in p.all_functions() {
            let mut add = BTreeSet::new();
            for g in f.callees() {
                let Some(ge) = extra.get(g) else {
                    return Err(IrError::Malformed(format!(
                        "call to undefined function {g}"
                    )));
                };
                add.extend(ge.iter().filter(|s| !local[&f.name].contains(*s)).cloned());
            }
            let mine = extra.get_mut(&f.name).unwrap();
            let before = mine.len();
            mine.extend(add);
            changed |= mine.len() != before;
        }
        if !changed {
            break;
        }
    }
    if let Some(s) = extra[&p.entry.name].iter().next() {
        return Err(IrError::Malformed(format!("undefined symbol {s}")));
    }
    let ordered = |name: &str| -> Result<Vec<(Kind, Sym)>, IrError> {
        let mut v = Vec::new();
        for s in &extra[name] {
            let kind = *kinds
                .get(s)
                .ok_or_else(|| IrError::Malformed(format!("symbol {s} has no kind")))?;
            v.push((kind, s.clone()));
        }
        v.sort_by(|a, b| a.0.cmp(&b.0).then(sym_order(&a.1).cmp(&sym_order(&b.1))));
        Ok(v)
    };
    let mut caps: BTreeMap<String, Vec<(Kind, Sym)>> = BTreeMap::new();
    for name in extra.keys() {
        caps.insert(name.clone(), ordered(name)?);
    }
    for f in std::iter::once(&mut p.entry).chain(p.functions.iter_mut()) {
        f.params
            .extend(caps[&f.name].iter().map(|(k, s)| Param::new(*k, s.clone())));
        add_captures(&mut f.body, &caps);
    }
    Ok(p)
}

/// Sorts `d10` after `d9`.
fn sym_order(s: &str) -> (usize, &str) {
    let digits = s.chars().rev().take_while(char::is_ascii_digit).count();
    let n = s[s.len() - digits..].parse().unwrap_or(0);
    (n, s)
}

fn add_captures(block: &mut Block, caps: &BTreeMap<String, Vec<(Kind, Sym)>>) {
    for s in block.iter_mut() {
        match s {
            IrStmt::Call {
                callee: Callee::Fn(g),
                args,
            } => {
                args.extend(caps[g.as_str()].iter().map(|(k, s)| Arg::forward(*k, s)));
            }
            IrStmt::MakeKont { func, captures, .. } => {
                *captures = caps[func.as_str()]
                    .iter()
                    .map(|(k, s)| Arg::forward(*k, s))
                    .collect();
            }
            _ => {}
        }
        for b in s.blocks_mut() {
            add_captures(b, caps);
        }
    }
}

pub(crate) const IN: &str = "in";
pub(crate) const D0: &str = "d0";

/// The seed continuation: `d := 1.0` on the result's adjoint.
pub(crate) fn seed<'a>() -> Kappa<'a> {
    Box::new(|_, v| match v {
        SVal::Num(_, Some(d)) => Ok(vec![IrStmt::CellSet {
            cell: d,
            value: Operand::Lit(1.0),
        }]),
        SVal::Num(_, None) => Ok(vec![]),
        other => Err(IrError::NotANumber(other.describe())),
    })
}

/// `d0 = ref 0; body; return !d0`
pub(crate) fn entry_body(st: &mut Stager, body: Block) -> Block {
    let t = st.fresh("t", Kind::Val);
    let mut out = vec![IrStmt::CellNew {
        sym: D0.into(),
        init: Operand::Lit(0.0),
    }];
    out.extend(body);
    out.push(IrStmt::CellRead {
        sym: t.clone(),
        cell: D0.into(),
    });
    out.push(IrStmt::Return(Operand::sym(t)));
    out
}

/// Stages the gradient of the one-argument function `f`. `f` may use
/// `if`, `letrec` and `seq` directly.
pub fn stage_reverse(f: &Expr) -> Result<IrProgram, IrError> {
    let f = freshen(f);
    let Expr::Lam(p, body) = &f else {
        return Err(IrError::NotLambda(f.form_name()));
    };
    let mut st = Stager::new();
    let env = SEnv::default().extend(p, SVal::Num(Operand::sym(IN), Some(D0.into())));
    let code = st.translate(body, env, seed())?;
    let body = entry_body(&mut st, code);
    let entry = IrFunction {
        name: "Snippet".into(),
        params: vec![Param::new(Kind::Val, IN)],
        body,
    };
    st.finish(entry)
}
