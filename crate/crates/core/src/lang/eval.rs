//! Reference evaluator: call-by-value with delimited control and a mutable
//! store, run as an abstract machine over an explicit stack of frames so that
//! `shift` can copy the continuation up to the nearest `reset` as data.

use super::expr::Expr;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("cannot apply {0}: not a function")]
    NotAFunction(String),
    #[error("cannot project from {0}: not a pair")]
    NotAPair(String),
    #[error("case on {0}: not a sum")]
    NotASum(String),
    #[error("cannot dereference or assign {0}: not a cell")]
    NotACell(String),
    #[error("'{op}' expects reals, found {found}")]
    NotAReal { op: &'static str, found: String },
    #[error("'{0}' is sugar; desugar before evaluating")]
    Sugar(&'static str),
    #[error("evaluation exceeded {0} stack frames")]
    DepthExceeded(usize),
}

#[derive(Clone, Debug)]
pub enum Value<'a> {
    Real(f64),
    Unit,
    Closure(Arc<Closure<'a>>),
    Pair(Arc<(Value<'a>, Value<'a>)>),
    Left(Arc<Value<'a>>),
    Right(Arc<Value<'a>>),
    Cell(usize),
    /// A captured delimited continuation, callable like a function.
    Cont(Arc<[Frame<'a>]>),
}

#[derive(Debug)]
pub struct Closure<'a> {
    pub env: Env<'a>,
    pub param: &'a str,
    pub body: &'a Expr,
}

impl<'a> Value<'a> {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn pair(a: Value<'a>, b: Value<'a>) -> Value<'a> {
        Value::Pair(Arc::new((a, b)))
    }

    pub fn boolean(b: bool) -> Value<'a> {
        if b {
            Value::Left(Arc::new(Value::Unit))
        } else {
            Value::Right(Arc::new(Value::Unit))
        }
    }

    fn kind(&self) -> String {
        match self {
            Value::Real(v) => format!("real {v}"),
            Value::Unit => "unit".into(),
            Value::Closure(_) => "a closure".into(),
            Value::Pair(_) => "a pair".into(),
            Value::Left(_) => "an inl value".into(),
            Value::Right(_) => "an inr value".into(),
            Value::Cell(i) => format!("cell #{i}"),
            Value::Cont(_) => "a continuation".into(),
        }
    }
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Unit => f.write_str("()"),
            Value::Closure(c) => write!(f, "<closure {}>", c.param),
            Value::Pair(p) => write!(f, "(pair {} {})", p.0, p.1),
            Value::Left(v) => write!(f, "(inl {v})"),
            Value::Right(v) => write!(f, "(inr {v})"),
            Value::Cell(i) => write!(f, "<cell {i}>"),
            Value::Cont(_) => f.write_str("<continuation>"),
        }
    }
}

/// Persistent environment; extension shares the tail.
#[derive(Clone, Debug, Default)]
pub struct Env<'a>(Option<Arc<EnvNode<'a>>>);

#[derive(Debug)]
pub struct EnvNode<'a> {
    name: &'a str,
    value: Value<'a>,
    next: Env<'a>,
}

impl<'a> Env<'a> {
    pub fn empty() -> Self {
        Env(None)
    }

    pub fn extend(&self, name: &'a str, value: Value<'a>) -> Self {
        Env(Some(Arc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value<'a>> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }
}

impl Drop for EnvNode<'_> {
    fn drop(&mut self) {
        // Unlink iteratively so long chains do not overflow the host stack.
        let mut next = self.next.0.take();
        while let Some(node) = next {
            match Arc::try_unwrap(node) {
                Ok(mut n) => next = n.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

/// Mutable cells; a cell id is its index, so ids are never reused.
#[derive(Clone, Debug, Default)]
pub struct Store<'a> {
    cells: Vec<Value<'a>>,
}

impl<'a> Store<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&self) -> usize {
        self.cells.len()
    }

    pub fn alloc(&mut self, v: Value<'a>) -> usize {
        self.cells.push(v);
        self.cells.len() - 1
    }

    pub fn get(&self, id: usize) -> Option<&Value<'a>> {
        self.cells.get(id)
    }

    pub fn set(&mut self, id: usize, v: Value<'a>) {
        self.cells[id] = v;
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bin {
    Add,
    Mul,
    Gt,
    App,
    Pair,
    Assign,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Un {
    Fst,
    Snd,
    Inl,
    Inr,
    Ref,
    Deref,
}

/// One pending step of the continuation.
#[derive(Clone, Debug)]
pub enum Frame<'a> {
    BinLeft(Bin, &'a Expr, Env<'a>),
    BinRight(Bin, Value<'a>),
    Unary(Un),
    LetBody(&'a str, &'a Expr, Env<'a>),
    Case(&'a Expr, Env<'a>),
    Prompt,
}

enum Control<'a> {
    Eval(&'a Expr, Env<'a>),
    Return(Value<'a>),
}

pub const DEFAULT_FRAME_LIMIT: usize = 1_000_000;

pub struct Machine<'a> {
    pub store: Store<'a>,
    stack: Vec<Frame<'a>>,
    frame_limit: usize,
}

impl<'a> Machine<'a> {
    pub fn new(store: Store<'a>) -> Self {
        Machine {
            store,
            stack: Vec::new(),
            frame_limit: DEFAULT_FRAME_LIMIT,
        }
    }

    pub fn with_frame_limit(mut self, limit: usize) -> Self {
        self.frame_limit = limit;
        self
    }

    pub fn eval(&mut self, e: &'a Expr, env: &Env<'a>) -> Result<Value<'a>, EvalError> {
        self.run(Control::Eval(e, env.clone()))
    }

    pub fn apply(&mut self, f: &Value<'a>, arg: Value<'a>) -> Result<Value<'a>, EvalError> {
        let base = self.stack.len();
        self.stack.push(Frame::Prompt);
        let c = self.call(f.clone(), arg)?;
        let out = self.run_from(c, base);
        self.stack.truncate(base);
        out
    }

    fn run(&mut self, c: Control<'a>) -> Result<Value<'a>, EvalError> {
        let base = self.stack.len();
        self.stack.push(Frame::Prompt);
        let out = self.run_from(c, base);
        self.stack.truncate(base);
        out
    }

    fn push(&mut self, f: Frame<'a>) -> Result<(), EvalError> {
        if self.stack.len() >= self.frame_limit {
            return Err(EvalError::DepthExceeded(self.frame_limit));
        }
        self.stack.push(f);
        Ok(())
    }

    fn call(&mut self, f: Value<'a>, arg: Value<'a>) -> Result<Control<'a>, EvalError> {
        match f {
            Value::Closure(c) => Ok(Control::Eval(c.body, c.env.extend(c.param, arg))),
            Value::Cont(frames) => {
                self.push(Frame::Prompt)?;
                for fr in frames.iter() {
                    self.push(fr.clone())?;
                }
                Ok(Control::Return(arg))
            }
            other => Err(EvalError::NotAFunction(other.kind())),
        }
    }

    fn run_from(&mut self, mut c: Control<'a>, base: usize) -> Result<Value<'a>, EvalError> {
        loop {
            c = match c {
                Control::Eval(e, env) => self.step(e, env)?,
                Control::Return(v) => {
                    if self.stack.len() == base + 1 {
                        return Ok(v);
                    }
                    let frame = self.stack.pop().expect("base prompt present");
                    self.resume(frame, v)?
                }
            };
        }
    }

    fn step(&mut self, e: &'a Expr, env: Env<'a>) -> Result<Control<'a>, EvalError> {
        use Expr::*;
        Ok(match e {
            Const(v) => Control::Return(Value::Real(*v)),
            Unit => Control::Return(Value::Unit),
            Var(n) => match env.lookup(n) {
                Some(v) => Control::Return(v.clone()),
                None => return Err(EvalError::UnboundVariable(n.clone())),
            },
            Lam(p, body) => Control::Return(Value::Closure(Arc::new(Closure {
                env,
                param: p,
                body,
            }))),
            Add(a, b) => self.binary(Bin::Add, a, b, env)?,
            Mul(a, b) => self.binary(Bin::Mul, a, b, env)?,
            Gt(a, b) => self.binary(Bin::Gt, a, b, env)?,
            App(a, b) => self.binary(Bin::App, a, b, env)?,
            Pair(a, b) => self.binary(Bin::Pair, a, b, env)?,
            Assign(a, b) => self.binary(Bin::Assign, a, b, env)?,
            Fst(a) => self.unary(Un::Fst, a, env)?,
            Snd(a) => self.unary(Un::Snd, a, env)?,
            Inl(a) => self.unary(Un::Inl, a, env)?,
            Inr(a) => self.unary(Un::Inr, a, env)?,
            Ref(a) => self.unary(Un::Ref, a, env)?,
            Deref(a) => self.unary(Un::Deref, a, env)?,
            Let(n, e1, e2) => {
                self.push(Frame::LetBody(n, e2, env.clone()))?;
                Control::Eval(e1, env)
            }
            Case(s, ..) => {
                self.push(Frame::Case(e, env.clone()))?;
                Control::Eval(s, env)
            }
            Reset(body) => {
                self.push(Frame::Prompt)?;
                Control::Eval(body, env)
            }
            Shift(k, body) => {
                let at = self
                    .stack
                    .iter()
                    .rposition(|f| matches!(f, Frame::Prompt))
                    .expect("base prompt present");
                let captured: Arc<[Frame<'a>]> = self.stack.split_off(at + 1).into();
                Control::Eval(body, env.extend(k, Value::Cont(captured)))
            }
            If(..) | LetRec(..) | Seq(..) => return Err(EvalError::Sugar(e.form_name())),
        })
    }

    fn binary(
        &mut self,
        op: Bin,
        a: &'a Expr,
        b: &'a Expr,
        env: Env<'a>,
    ) -> Result<Control<'a>, EvalError> {
        self.push(Frame::BinLeft(op, b, env.clone()))?;
        Ok(Control::Eval(a, env))
    }

    fn unary(&mut self, op: Un, a: &'a Expr, env: Env<'a>) -> Result<Control<'a>, EvalError> {
        self.push(Frame::Unary(op))?;
        Ok(Control::Eval(a, env))
    }

    fn resume(&mut self, frame: Frame<'a>, v: Value<'a>) -> Result<Control<'a>, EvalError> {
        Ok(match frame {
            Frame::Prompt => Control::Return(v),
            Frame::BinLeft(op, b, env) => {
                self.push(Frame::BinRight(op, v))?;
                Control::Eval(b, env)
            }
            Frame::BinRight(op, l) => self.finish_binary(op, l, v)?,
            Frame::Unary(op) => Control::Return(self.finish_unary(op, v)?),
            Frame::LetBody(n, body, env) => Control::Eval(body, env.extend(n, v)),
            Frame::Case(e, env) => {
                let Expr::Case(_, n1, e1, n2, e2) = e else {
                    unreachable!("case frame")
                };
                match v {
                    Value::Left(x) => Control::Eval(e1, env.extend(n1, (*x).clone())),
                    Value::Right(x) => Control::Eval(e2, env.extend(n2, (*x).clone())),
                    other => return Err(EvalError::NotASum(other.kind())),
                }
            }
        })
    }

    fn finish_binary(
        &mut self,
        op: Bin,
        l: Value<'a>,
        r: Value<'a>,
    ) -> Result<Control<'a>, EvalError> {
        let reals = |name: &'static str| match (&l, &r) {
            (Value::Real(a), Value::Real(b)) => Ok((*a, *b)),
            (Value::Real(_), other) | (other, _) => Err(EvalError::NotAReal {
                op: name,
                found: other.kind(),
            }),
        };
        Ok(Control::Return(match op {
            Bin::Add => {
                let (a, b) = reals("+")?;
                Value::Real(a + b)
            }
            Bin::Mul => {
                let (a, b) = reals("*")?;
                Value::Real(a * b)
            }
            Bin::Gt => {
                let (a, b) = reals(">")?;
                Value::boolean(a > b)
            }
            Bin::Pair => Value::pair(l, r),
            Bin::Assign => match l {
                Value::Cell(id) => {
                    self.store.set(id, r);
                    Value::Unit
                }
                other => return Err(EvalError::NotACell(other.kind())),
            },
            Bin::App => return self.call(l, r),
        }))
    }

    fn finish_unary(&mut self, op: Un, v: Value<'a>) -> Result<Value<'a>, EvalError> {
        Ok(match op {
            Un::Fst | Un::Snd => match v {
                Value::Pair(p) => {
                    if op == Un::Fst {
                        p.0.clone()
                    } else {
                        p.1.clone()
                    }
                }
                other => return Err(EvalError::NotAPair(other.kind())),
            },
            Un::Inl => Value::Left(Arc::new(v)),
            Un::Inr => Value::Right(Arc::new(v)),
            Un::Ref => Value::Cell(self.store.alloc(v)),
            Un::Deref => match v {
                Value::Cell(id) => self.store.get(id).expect("live cell").clone(),
                other => return Err(EvalError::NotACell(other.kind())),
            },
        })
    }
}

/// Evaluates `e` under `env` and `store`, returning the value and final store.
pub fn eval<'a>(
    e: &'a Expr,
    env: &Env<'a>,
    store: Store<'a>,
) -> Result<(Value<'a>, Store<'a>), EvalError> {
    let mut m = Machine::new(store);
    let v = m.eval(e, env)?;
    Ok((v, m.store))
}

pub fn eval_closed(e: &Expr) -> Result<Value<'_>, EvalError> {
    eval(e, &Env::empty(), Store::new()).map(|(v, _)| v)
}

/// Evaluates the closed function `f` and applies it to the real `x`,
/// expecting a real result.
pub fn apply_real(f: &Expr, x: f64) -> Result<f64, EvalError> {
    apply_real_with_limit(f, x, DEFAULT_FRAME_LIMIT)
}

pub fn apply_real_with_limit(f: &Expr, x: f64, limit: usize) -> Result<f64, EvalError> {
    let mut m = Machine::new(Store::new()).with_frame_limit(limit);
    let fv = m.eval(f, &Env::empty())?;
    let out = m.apply(&fv, Value::Real(x))?;
    out.as_real().ok_or_else(|| EvalError::NotAReal {
        op: "result",
        found: out.kind(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, prepare};

    fn run(src: &str) -> Result<String, EvalError> {
        let e = prepare(&parse(src).unwrap());
        eval_closed(&e).map(|v| v.to_string())
    }

    #[test]
    fn arithmetic_and_store() {
        assert_eq!(run("(* 2.0 3.0)").unwrap(), "6");
        assert_eq!(
            run("(let r (ref 0.0) (seq (assign r 2.0) (deref r)))").unwrap(),
            "2"
        );
    }

    #[test]
    fn shift_reset() {
        assert_eq!(
            run("(reset (+ 1.0 (shift k (app k (app k 1.0)))))").unwrap(),
            "3"
        );
        assert_eq!(run("(+ 10.0 (reset (+ 1.0 (shift k 5.0))))").unwrap(), "15");
        assert_eq!(run("(reset (shift k (app k 4.0)))").unwrap(), "4");
    }

    #[test]
    fn recursion_via_letrec() {
        let src = "(letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f 8.0))";
        assert_eq!(run(src).unwrap(), "1");
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(run("y"), Err(EvalError::UnboundVariable(_))));
        assert!(matches!(
            run("(app 1.0 2.0)"),
            Err(EvalError::NotAFunction(_))
        ));
        assert!(matches!(run("(fst 1.0)"), Err(EvalError::NotAPair(_))));
        assert!(matches!(
            run("(case 1.0 a a b b)"),
            Err(EvalError::NotASum(_))
        ));
        assert!(matches!(run("(deref 1.0)"), Err(EvalError::NotACell(_))));
        assert!(matches!(run("(+ () 1.0)"), Err(EvalError::NotAReal { .. })));
        let sugar = parse("(seq 1.0 2.0)").unwrap();
        assert!(matches!(eval_closed(&sugar), Err(EvalError::Sugar("seq"))));
    }

    #[test]
    fn frame_limit() {
        let e = prepare(&parse("(letrec f (lam n (+ 1.0 (app f n))) (app f 0.0))").unwrap());
        let err = apply_real_with_limit(&Expr::lam("z", e), 0.0, 10_000).unwrap_err();
        assert_eq!(err, EvalError::DepthExceeded(10_000));
    }
}
