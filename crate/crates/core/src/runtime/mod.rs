//! Operator-overloading AD runtimes over host values.

pub mod arith;
pub mod cps;
pub mod dual;
pub mod functional;
pub mod probe;
pub mod tagged;
pub mod tape;

pub use arith::ArithFn;
pub use cps::{grad_cps, CpsRun, RevNum, Update};
pub use dual::{grad_dual, Dual};
pub use functional::{grad_functional, AdjointMap, Ids};
pub use probe::perturbation_confusion_probe;
pub use tagged::{derivative_tagged, Tagged};
pub use tape::{grad_forward_over_reverse, grad_tape, Tape, TapeEntry, TapeVar};

use std::fmt::Debug;
use std::ops::{Add, Mul};

/// Scalars that reverse-mode runtimes can carry as primals and adjoints.
pub trait Scalar: Copy + Debug + PartialEq + Add<Output = Self> + Mul<Output = Self> {
    fn constant(c: f64) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
}

/// Numbers a direct-style arithmetic program can be evaluated over.
/// `lift` takes `self` so that runtimes with per-run state can attach a
/// constant to that state.
pub trait Number: Clone {
    fn lift(&self, c: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
}

impl Number for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
}

/// Kind of a recorded arithmetic step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Add,
    Mul,
}
