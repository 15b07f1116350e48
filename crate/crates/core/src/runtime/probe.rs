//! The nested-derivative program that exposes perturbation confusion:
//! `d/dx [ x * (d/dy (x + y) at y = 1) ]` at `x = 1`, whose inner
//! derivative is 1 and whose outer derivative is therefore 1.

use super::dual::{grad_dual, Dual};
use super::tagged::{derivative_tagged, Tagged};
use super::Number;
use std::cell::Cell;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeResult {
    pub naive_inner: f64,
    pub naive_outer: f64,
    pub tagged_inner: f64,
    pub tagged_outer: f64,
}

pub fn perturbation_confusion_probe() -> ProbeResult {
    let naive_inner = Cell::new(f64::NAN);
    let naive_outer = grad_dual(
        |x| {
            let should_be_one = grad_dual(|y| x + y, 1.0);
            naive_inner.set(should_be_one);
            x * Dual::new(should_be_one, 0.0)
        },
        1.0,
    );

    let tagged_inner = Cell::new(f64::NAN);
    let tagged_outer = derivative_tagged(
        &|x| {
            let should_be_one = derivative_tagged(&|y| x.add(y), &Tagged::real(1.0));
            tagged_inner.set(should_be_one.primal());
            x.mul(&Tagged::real(should_be_one.primal()))
        },
        &Tagged::real(1.0),
    )
    .primal();

    ProbeResult {
        naive_inner: naive_inner.get(),
        naive_outer,
        tagged_inner: tagged_inner.get(),
        tagged_outer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_and_fix() {
        let r = perturbation_confusion_probe();
        assert_eq!((r.naive_inner, r.naive_outer), (2.0, 2.0));
        assert_eq!((r.tagged_inner, r.tagged_outer), (1.0, 1.0));
    }
}
