//! Oracles and corpora: finite differences, cross-mode comparison,
//! generated straight-line programs, and a gradient-descent driver.

pub mod corpus;
pub mod descent;
pub mod report;

pub use corpus::{random_program, CorpusSpec};
pub use descent::{gradient_descent, Step};
pub use report::{check_program, crosscheck, crosscheck_with, CheckConfig, GradReport, ModeResult};

use crate::forward::{forward_wrapper, grad_forward_tagged_fn, symbolic_gradient};
use crate::lang::eval::{apply_real_with_limit, DEFAULT_FRAME_LIMIT};
use crate::lang::{prepare, Expr};
use crate::reverse::{second_derivative_program, ReverseVariant};
use crate::runtime::cps::grad_cps_fn;
use crate::runtime::functional::grad_functional_fn;
use crate::runtime::tape::{grad_forward_over_reverse, grad_tape_fn};
use crate::runtime::{grad_dual, ArithFn, Dual};
use crate::staging::{ir_eval_with_limit, stage_reverse, DEFAULT_DEPTH_LIMIT};
use crate::Error;
use std::fmt;
use std::str::FromStr;

/// Every way the library can compute a derivative of a one-argument program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Forward,
    Symbolic,
    Dual,
    Cps,
    Tape,
    Functional,
    ReverseTargetShift,
    ReverseMetaShift,
    ReverseFullCps,
    Staged,
    Forward2,
    ForwardOverReverse,
    Reverse2,
}

impl Mode {
    pub const ALL: [Mode; 13] = [
        Mode::Forward,
        Mode::Symbolic,
        Mode::Dual,
        Mode::Cps,
        Mode::Tape,
        Mode::Functional,
        Mode::ReverseTargetShift,
        Mode::ReverseMetaShift,
        Mode::ReverseFullCps,
        Mode::Staged,
        Mode::Forward2,
        Mode::ForwardOverReverse,
        Mode::Reverse2,
    ];

    /// First-derivative modes whose results agree bitwise with each other.
    pub const FORWARD_CLASS: [Mode; 3] = [Mode::Dual, Mode::Forward, Mode::Symbolic];

    pub const REVERSE_CLASS: [Mode; 7] = [
        Mode::Cps,
        Mode::Tape,
        Mode::Functional,
        Mode::ReverseTargetShift,
        Mode::ReverseMetaShift,
        Mode::ReverseFullCps,
        Mode::Staged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Symbolic => "symbolic",
            Mode::Dual => "dual",
            Mode::Cps => "cps",
            Mode::Tape => "tape",
            Mode::Functional => "functional",
            Mode::ReverseTargetShift => "reverse-target-shift",
            Mode::ReverseMetaShift => "reverse-meta-shift",
            Mode::ReverseFullCps => "reverse-cps-full",
            Mode::Staged => "staged",
            Mode::Forward2 => "forward2",
            Mode::ForwardOverReverse => "forward-over-reverse",
            Mode::Reverse2 => "reverse2",
        }
    }

    /// 1 for gradients, 2 for second derivatives.
    pub fn order(self) -> u8 {
        match self {
            Mode::Forward2 | Mode::ForwardOverReverse | Mode::Reverse2 => 2,
            _ => 1,
        }
    }

    /// Derivative of `f` at `x0`. `limit` overrides the evaluator frame limit
    /// and the IR call-depth limit.
    pub fn derivative(self, f: &Expr, x0: f64, limit: Option<usize>) -> Result<f64, Error> {
        let eval_limit = limit.unwrap_or(DEFAULT_FRAME_LIMIT);
        let run = |program: Expr| Ok(apply_real_with_limit(&program, x0, eval_limit)?);
        let arith = || ArithFn::compile(&prepare(f));
        match self {
            Mode::Forward => run(forward_wrapper(&prepare(f))?),
            Mode::Symbolic => run(symbolic_gradient(&prepare(f))?),
            Mode::Dual => {
                let af = arith()?;
                Ok(grad_dual(|d: Dual| af.eval(d), x0))
            }
            Mode::Cps => Ok(grad_cps_fn(&arith()?, x0)),
            Mode::Tape => Ok(grad_tape_fn(&arith()?, x0)),
            Mode::Functional => Ok(grad_functional_fn(&arith()?, x0)),
            Mode::ReverseTargetShift => run(ReverseVariant::TargetShift.wrapper(&prepare(f))?),
            Mode::ReverseMetaShift => run(ReverseVariant::MetaShift.wrapper(&prepare(f))?),
            Mode::ReverseFullCps => run(ReverseVariant::FullCps.wrapper(&prepare(f))?),
            Mode::Staged => {
                let p = stage_reverse(f)?;
                Ok(ir_eval_with_limit(
                    &p,
                    x0,
                    limit.unwrap_or(DEFAULT_DEPTH_LIMIT),
                )?)
            }
            Mode::Forward2 => Ok(grad_forward_tagged_fn(&arith()?, x0, 2)),
            Mode::ForwardOverReverse => Ok(grad_forward_over_reverse(&arith()?, x0)),
            Mode::Reverse2 => run(second_derivative_program(
                f,
                ReverseVariant::MetaShift,
                ReverseVariant::MetaShift,
            )?),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        if s == "reverse-full-cps" {
            return Ok(Mode::ReverseFullCps);
        }
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode '{s}'"))
    }
}

/// Default central-difference step for a probe at `x0`.
pub fn default_step(x0: f64) -> f64 {
    1e-6 * x0.abs().max(1.0)
}

/// Central difference `(f(x0+h) - f(x0-h)) / 2h` of the program `f`.
pub fn finite_diff(f: &Expr, x0: f64, h: f64) -> Result<f64, Error> {
    let p = prepare(f);
    let hi = apply_real_with_limit(&p, x0 + h, DEFAULT_FRAME_LIMIT)?;
    let lo = apply_real_with_limit(&p, x0 - h, DEFAULT_FRAME_LIMIT)?;
    Ok((hi - lo) / (2.0 * h))
}

/// `|a - b|` scaled by `max(|a|, |b|, 1)`.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn finite_difference_examples() {
        let sq = parse("(lam x (* x x))").unwrap();
        assert!((finite_diff(&sq, 3.0, 1e-6).unwrap() - 6.0).abs() < 1e-5);
        let c = parse("(lam x 4.0)").unwrap();
        assert_eq!(finite_diff(&c, 3.0, 1e-6).unwrap(), 0.0);
        let cubic = parse("(lam x (+ (* 2.0 x) (* (* x x) x)))").unwrap();
        assert!((finite_diff(&cubic, 1.0, 1e-6).unwrap() - 5.0).abs() < 1e-5);
    }

    #[test]
    fn every_mode_on_the_cubic() {
        let f = parse("(lam x (+ (* 2.0 x) (* (* x x) x)))").unwrap();
        for m in Mode::ALL {
            for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let want = if m.order() == 1 {
                    2.0 + 3.0 * x * x
                } else {
                    6.0 * x
                };
                assert_eq!(m.derivative(&f, x, None).unwrap(), want, "{m} at {x}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert_eq!(
            "reverse-full-cps".parse::<Mode>().unwrap(),
            Mode::ReverseFullCps
        );
        assert!("reverse".parse::<Mode>().is_err());
    }
}
