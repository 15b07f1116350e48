//! Reverse-mode program transformations: target-level shift/reset, the
//! translation-time shift/reset that yields CPS code, and the same
//! translation written with explicit meta continuations.

pub mod common;
pub mod full_cps;
pub mod meta_shift;
pub mod target_shift;

pub use common::{has_eta_redex, has_let_of_variable, normalize_tail};
pub use full_cps::{full_cps_wrapper, rev_transform_full_cps};
pub use meta_shift::{meta_shift_wrapper, rev_transform_meta_shift, Meta};
pub use target_shift::{rev_transform_target_shift, target_shift_wrapper};

use crate::error::TransformError;
use crate::lang::{apply_real, freshen, prepare, Expr, Name, NameGen};
use std::rc::Rc;

/// Static renaming for lets whose right-hand side translated to a variable.
pub(crate) type Ren = Rc<Vec<(Name, Name)>>;

pub(crate) fn lookup(ren: &Ren, y: &str) -> Name {
    ren.iter()
        .rev()
        .find(|(from, _)| from == y)
        .map_or_else(|| y.to_string(), |(_, to)| to.clone())
}

pub(crate) fn extend(ren: &Ren, from: &str, to: &str) -> Ren {
    let mut v = (**ren).clone();
    v.push((from.to_string(), to.to_string()));
    Rc::new(v)
}

/// `λx. let xv = (x, ref 0) in (df xv) (λz. z.1 := 1.0); !xv.1`
pub(crate) fn cps_wrapper(g: &mut NameGen, df: Expr) -> Expr {
    let (x, xv, z) = (g.fresh("x"), g.fresh("v"), g.fresh("z"));
    let seed = Expr::lam(
        z.clone(),
        Expr::assign(Expr::snd(Expr::var(z)), Expr::Const(1.0)),
    );
    let run = Expr::app(Expr::app(df, Expr::var(xv.clone())), seed);
    let body = common::seq(g, run, Expr::deref(Expr::snd(Expr::var(xv.clone()))));
    Expr::lam(
        x.clone(),
        Expr::let_(
            xv,
            Expr::pair(Expr::var(x), Expr::ref_(Expr::Const(0.0))),
            body,
        ),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReverseVariant {
    TargetShift,
    MetaShift,
    FullCps,
}

impl ReverseVariant {
    pub const ALL: [ReverseVariant; 3] = [
        ReverseVariant::TargetShift,
        ReverseVariant::MetaShift,
        ReverseVariant::FullCps,
    ];

    pub fn transform(self, e: &Expr) -> Result<Expr, TransformError> {
        match self {
            ReverseVariant::TargetShift => rev_transform_target_shift(e),
            ReverseVariant::MetaShift => rev_transform_meta_shift(e),
            ReverseVariant::FullCps => rev_transform_full_cps(e),
        }
    }

    /// The gradient program for the one-argument lambda `f`.
    pub fn wrapper(self, f: &Expr) -> Result<Expr, TransformError> {
        match self {
            ReverseVariant::TargetShift => target_shift_wrapper(f),
            ReverseVariant::MetaShift => meta_shift_wrapper(f),
            ReverseVariant::FullCps => full_cps_wrapper(f),
        }
    }
}

/// Prepares `f`, builds the gradient program and evaluates it at `x0`.
pub fn grad_reverse(f: &Expr, x0: f64, variant: ReverseVariant) -> Result<f64, crate::Error> {
    let w = variant.wrapper(&prepare(f))?;
    Ok(apply_real(&w, x0)?)
}

/// The gradient program of the gradient program of `f`, which computes
/// `f''`. The inner translation must leave no shift/reset behind, so only
/// the CPS variants qualify.
pub fn second_derivative_program(
    f: &Expr,
    inner: ReverseVariant,
    outer: ReverseVariant,
) -> Result<Expr, TransformError> {
    if inner == ReverseVariant::TargetShift {
        return Err(TransformError::Control("shift"));
    }
    let g = freshen(&inner.wrapper(&prepare(f))?);
    outer.wrapper(&g)
}

pub fn grad_reverse_of_reverse(
    f: &Expr,
    x0: f64,
    inner: ReverseVariant,
    outer: ReverseVariant,
) -> Result<f64, crate::Error> {
    let w = second_derivative_program(f, inner, outer)?;
    Ok(apply_real(&w, x0)?)
}
