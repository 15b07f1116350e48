//! Binary trees as run-time input and the staged tree fold.

use super::ir::*;
use super::stage::{entry_body, seed, SEnv, SVal, Stager, D0, IN};
use super::IrError;
use crate::lang::parse::{is_float_literal, read_sexp, Sexp};
use crate::lang::{freshen, Expr};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Leaf,
    Node(f64, Arc<Tree>, Arc<Tree>),
}

impl Tree {
    pub fn node(v: f64, l: Tree, r: Tree) -> Tree {
        Tree::Node(v, Arc::new(l), Arc::new(r))
    }

    /// Reads `(leaf)` or `(node FLOAT tree tree)`.
    pub fn parse(text: &str) -> Result<Tree, IrError> {
        let s = read_sexp(text).map_err(|e| IrError::BadTree(e.to_string()))?;
        Self::from_sexp(&s)
    }

    fn from_sexp(s: &Sexp) -> Result<Tree, IrError> {
        let bad = |what: &str| {
            let p = s.pos();
            IrError::BadTree(format!("{}:{}: {what}", p.line, p.col))
        };
        let Sexp::List(items, _) = s else {
            return Err(bad("expected (leaf) or (node ..)"));
        };
        match items.as_slice() {
            [Sexp::Atom(h, _)] if h == "leaf" => Ok(Tree::Leaf),
            [Sexp::Atom(h, _), Sexp::Atom(v, _), l, r] if h == "node" => {
                if !is_float_literal(v) {
                    return Err(bad("node value must be a float"));
                }
                let v: f64 = v.parse().map_err(|_| bad("node value must be a float"))?;
                Ok(Tree::node(v, Self::from_sexp(l)?, Self::from_sexp(r)?))
            }
            _ => Err(bad("expected (leaf) or (node FLOAT tree tree)")),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Tree::Leaf => 0,
            Tree::Node(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    /// The same tree as a program value: `inl ()` for a leaf and
    /// `inr (v, (l, r))` for a node.
    pub fn to_expr(&self) -> Expr {
        match self {
            Tree::Leaf => Expr::inl(Expr::Unit),
            Tree::Node(v, l, r) => Expr::inr(Expr::pair(
                Expr::Const(*v),
                Expr::pair(l.to_expr(), r.to_expr()),
            )),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf => f.write_str("(leaf)"),
            Tree::Node(v, l, r) => write!(f, "(node {v:?} {l} {r})"),
        }
    }
}

/// Splits a fold body `λl. λr. λv. e` into its parts.
fn fold_parts(body: &Expr) -> Result<(&str, &str, &str, &Expr), IrError> {
    if let Expr::Lam(l, b1) = body {
        if let Expr::Lam(r, b2) = &**b1 {
            if let Expr::Lam(v, e) = &**b2 {
                return Ok((l, r, v, e));
            }
        }
    }
    Err(IrError::NotLambda(
        "fold body must be (lam l (lam r (lam v e)))",
    ))
}

/// The gradient, with respect to the initial value `in`, of folding a
/// run-time tree with `body`: a leaf yields `in`, a node with value `v`
/// yields `body (fold left) (fold right) v`.
pub fn stage_tree(body: &Expr) -> Result<IrProgram, IrError> {
    let body = freshen(body);
    let (l, r, v, e) = fold_parts(&body)?;
    let mut st = Stager::new();
    let tree = "tree".to_string();
    st.set_kind(&tree, Kind::Tree);
    let (rec, rec_key) = st.fresh_fn("rec");

    // Top continuation: seed the result's adjoint.
    let top = st.lift(seed())?;
    let ktop = st.fresh("k", Kind::Kont);

    // rec(t, k0): if t is a node, fold the left subtree, then the right,
    // then combine; a leaf passes `in` to k0.
    let t = st.fresh("tree", Kind::Tree);
    let k0 = st.fresh("k", Kind::Kont);
    let tv = st.fresh("v", Kind::Val);
    let tl = st.fresh("tree", Kind::Tree);
    let tr = st.fresh("tree", Kind::Tree);

    let (kr_fn, kr_key) = st.fresh_fn("k");
    let xl = st.fresh("x", Kind::Val);
    let dl = st.fresh("d", Kind::Cell);
    let xr = st.fresh("x", Kind::Val);
    let dr = st.fresh("d", Kind::Cell);
    let env = SEnv::default()
        .extend(l, SVal::Num(Operand::sym(xl.clone()), Some(dl.clone())))
        .extend(r, SVal::Num(Operand::sym(xr.clone()), Some(dr.clone())))
        .extend(v, SVal::Num(Operand::sym(tv.clone()), None));
    let k0c = k0.clone();
    let combine = st.translate(
        e,
        env,
        Box::new(move |st, res| {
            let (x, d, mut out) = st.as_arg(res)?;
            out.push(IrStmt::Call {
                callee: Callee::Kont(k0c),
                args: vec![Arg::Val(x), Arg::Cell(d)],
            });
            Ok(out)
        }),
    )?;
    st.push_fn(
        kr_key,
        IrFunction {
            name: kr_fn.clone(),
            params: vec![Param::new(Kind::Val, xr), Param::new(Kind::Cell, dr)],
            body: combine,
        },
    );

    let (kl_fn, kl_key) = st.fresh_fn("k");
    let kr = st.fresh("k", Kind::Kont);
    st.push_fn(
        kl_key,
        IrFunction {
            name: kl_fn.clone(),
            params: vec![Param::new(Kind::Val, xl), Param::new(Kind::Cell, dl)],
            body: vec![
                IrStmt::MakeKont {
                    sym: kr.clone(),
                    func: kr_fn,
                    captures: vec![],
                },
                IrStmt::Call {
                    callee: Callee::Fn(rec.clone()),
                    args: vec![Arg::Tree(tr.clone()), Arg::Kont(kr)],
                },
            ],
        },
    );

    let kl = st.fresh("k", Kind::Kont);
    let rec_body = vec![IrStmt::TreeCase {
        tree: t.clone(),
        value: tv,
        left: tl.clone(),
        right: tr,
        node: vec![
            IrStmt::MakeKont {
                sym: kl.clone(),
                func: kl_fn,
                captures: vec![],
            },
            IrStmt::Call {
                callee: Callee::Fn(rec.clone()),
                args: vec![Arg::Tree(tl), Arg::Kont(kl)],
            },
        ],
        leaf: vec![IrStmt::Call {
            callee: Callee::Kont(k0.clone()),
            args: vec![Arg::Val(Operand::sym(IN)), Arg::Cell(D0.into())],
        }],
    }];
    st.push_fn(
        rec_key,
        IrFunction {
            name: rec.clone(),
            params: vec![Param::new(Kind::Tree, t), Param::new(Kind::Kont, k0)],
            body: rec_body,
        },
    );

    let main = vec![
        IrStmt::MakeKont {
            sym: ktop.clone(),
            func: top,
            captures: vec![],
        },
        IrStmt::Call {
            callee: Callee::Fn(rec),
            args: vec![Arg::Tree(tree.clone()), Arg::Kont(ktop)],
        },
    ];
    let body = entry_body(&mut st, main);
    let entry = IrFunction {
        name: "Snippet".into(),
        params: vec![Param::new(Kind::Tree, tree), Param::new(Kind::Val, IN)],
        body,
    };
    st.finish(entry)
}

/// The fold as an ordinary program over the tree encoded by
/// [`Tree::to_expr`], for comparison with the staged version.
pub fn tree_program(body: &Expr, tree: &Tree) -> Expr {
    let app = Expr::app;
    let v = |s: &str| Expr::var(s);
    let node = Expr::let_(
        "_tv",
        Expr::fst(v("_tn")),
        app(
            app(
                app(
                    body.clone(),
                    app(v("_fold"), Expr::fst(Expr::snd(v("_tn")))),
                ),
                app(v("_fold"), Expr::snd(Expr::snd(v("_tn")))),
            ),
            v("_tv"),
        ),
    );
    let fold = Expr::case(v("_t"), "_tl", v("_x"), "_tn", node);
    Expr::lam(
        "_x",
        Expr::letrec("_fold", "_t", fold, app(v("_fold"), tree.to_expr())),
    )
}
