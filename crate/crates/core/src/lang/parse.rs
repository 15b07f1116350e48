//! S-expression reader and the tree builder for [`Expr`].

use super::expr::Expr;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected ')'")]
    UnexpectedClose,
    #[error("invalid token '{0}'")]
    InvalidToken(String),
    #[error("unknown form '{0}'")]
    UnknownForm(String),
    #[error("form '{form}' expects {expected}")]
    BadArity {
        form: String,
        expected: &'static str,
    },
    #[error("expected identifier, found {0}")]
    ExpectedIdent(String),
    #[error("expected a form name at head of list")]
    ExpectedHead,
    #[error("letrec binding must be a (lam IDENT e) form")]
    LetrecNotLambda,
    #[error("trailing input after expression")]
    Trailing,
}

/// Position of a token, 1-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn error(self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            kind,
        }
    }
}

/// Generic S-expression tree; `()` reads as an empty list.
#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Sexp::Atom(a, _) => format!("'{a}'"),
            Sexp::List(..) => "a list".to_string(),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' | ')' => {
                chars.next();
                col += 1;
                out.push((if c == '(' { Tok::Open } else { Tok::Close }, pos));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                out.push((Tok::Atom(s), pos));
            }
        }
    }
    Ok(out)
}

/// Reads exactly one S-expression from `text`.
pub fn read_sexp(text: &str) -> Result<Sexp, ParseError> {
    let toks = tokenize(text)?;
    let mut i = 0;
    let s = read_one(&toks, &mut i, end_pos(text))?;
    if let Some((_, p)) = toks.get(i) {
        return Err(p.error(ParseErrorKind::Trailing));
    }
    Ok(s)
}

fn end_pos(text: &str) -> Pos {
    let line = text.lines().count().max(1);
    let col = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, col }
}

fn read_one(toks: &[(Tok, Pos)], i: &mut usize, eof: Pos) -> Result<Sexp, ParseError> {
    let Some((tok, pos)) = toks.get(*i) else {
        return Err(eof.error(ParseErrorKind::UnexpectedEof));
    };
    *i += 1;
    match tok {
        Tok::Atom(a) => Ok(Sexp::Atom(a.clone(), *pos)),
        Tok::Close => Err(pos.error(ParseErrorKind::UnexpectedClose)),
        Tok::Open => {
            let mut items = Vec::new();
            loop {
                match toks.get(*i) {
                    None => return Err(eof.error(ParseErrorKind::UnexpectedEof)),
                    Some((Tok::Close, _)) => {
                        *i += 1;
                        return Ok(Sexp::List(items, *pos));
                    }
                    Some(_) => items.push(read_one(toks, i, eof)?),
                }
            }
        }
    }
}

pub fn is_float_literal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

pub fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '-')
}

/// Parses program text into an [`Expr`]. Sugar forms are kept.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    build(&read_sexp(text)?)
}

fn ident(s: &Sexp) -> Result<String, ParseError> {
    match s {
        Sexp::Atom(a, _) if is_ident(a) => Ok(a.clone()),
        _ => Err(s.pos().error(ParseErrorKind::ExpectedIdent(s.describe()))),
    }
}

/// Converts a generic S-expression into an [`Expr`].
pub fn build(s: &Sexp) -> Result<Expr, ParseError> {
    let (items, pos) = match s {
        Sexp::Atom(a, pos) => {
            if is_float_literal(a) {
                let v: f64 = a
                    .parse()
                    .map_err(|_| pos.error(ParseErrorKind::InvalidToken(a.clone())))?;
                return Ok(Expr::Const(v));
            }
            if is_ident(a) {
                return Ok(Expr::Var(a.clone()));
            }
            return Err(pos.error(ParseErrorKind::InvalidToken(a.clone())));
        }
        Sexp::List(items, pos) => (items, *pos),
    };
    if items.is_empty() {
        return Ok(Expr::Unit);
    }
    let head = match &items[0] {
        Sexp::Atom(a, _) => a.as_str(),
        Sexp::List(..) => return Err(pos.error(ParseErrorKind::ExpectedHead)),
    };
    let args = &items[1..];
    let arity = |n: usize, expected: &'static str| -> Result<(), ParseError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(pos.error(ParseErrorKind::BadArity {
                form: head.to_string(),
                expected,
            }))
        }
    };
    let e = |i: usize| build(&args[i]);
    Ok(match head {
        "+" | "*" | ">" | "app" | "pair" | "assign" | "seq" => {
            arity(2, "two expressions")?;
            let (a, c) = (e(0)?, e(1)?);
            match head {
                "+" => Expr::add(a, c),
                "*" => Expr::mul(a, c),
                ">" => Expr::gt(a, c),
                "app" => Expr::app(a, c),
                "pair" => Expr::pair(a, c),
                "assign" => Expr::assign(a, c),
                _ => Expr::seq(a, c),
            }
        }
        "fst" | "snd" | "inl" | "inr" | "ref" | "deref" | "reset" => {
            arity(1, "one expression")?;
            let a = e(0)?;
            match head {
                "fst" => Expr::fst(a),
                "snd" => Expr::snd(a),
                "inl" => Expr::inl(a),
                "inr" => Expr::inr(a),
                "ref" => Expr::ref_(a),
                "deref" => Expr::deref(a),
                _ => Expr::reset(a),
            }
        }
        "lam" | "shift" => {
            arity(2, "an identifier and an expression")?;
            let n = ident(&args[0])?;
            let body = e(1)?;
            if head == "lam" {
                Expr::lam(n, body)
            } else {
                Expr::shift(n, body)
            }
        }
        "let" => {
            arity(3, "an identifier and two expressions")?;
            Expr::let_(ident(&args[0])?, e(1)?, e(2)?)
        }
        "case" => {
            arity(5, "e IDENT e IDENT e")?;
            Expr::case(e(0)?, ident(&args[1])?, e(2)?, ident(&args[3])?, e(4)?)
        }
        "if" => {
            arity(3, "three expressions")?;
            Expr::if_(e(0)?, e(1)?, e(2)?)
        }
        "letrec" => {
            arity(3, "IDENT (lam IDENT e) e")?;
            let f = ident(&args[0])?;
            match build(&args[1])? {
                Expr::Lam(x, body) => Expr::letrec(f, x, *body, e(2)?),
                _ => return Err(args[1].pos().error(ParseErrorKind::LetrecNotLambda)),
            }
        }
        other => {
            return Err(items[0]
                .pos()
                .error(ParseErrorKind::UnknownForm(other.to_string())))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_and_idents() {
        for s in ["1", "-2.5", "+.5", "3.", "1e10", "2.5E-3"] {
            assert!(is_float_literal(s), "{s}");
        }
        for s in ["-", ".", "e5", "1e", "x1", "1.2.3"] {
            assert!(!is_float_literal(s), "{s}");
        }
        assert!(is_ident("y1'"));
        assert!(is_ident("_k-2"));
        assert!(!is_ident("1x"));
    }

    #[test]
    fn reports_position() {
        let err = parse("(let y\n  (foo x) y)").unwrap_err();
        assert_eq!((err.line, err.col), (2, 4));
        assert!(matches!(err.kind, ParseErrorKind::UnknownForm(_)));
        let err = parse("(+ 1.0").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEof);
    }

    #[test]
    fn comments_and_unit() {
        let e = parse("; header\n(pair () x) ; trailing").unwrap();
        assert_eq!(e, Expr::pair(Expr::Unit, Expr::var("x")));
    }
}
