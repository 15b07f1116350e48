//! Untagged dual numbers.

use super::{Number, Scalar};
use std::ops::{Add, Mul};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub x: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(x: f64, d: f64) -> Dual {
        Dual { x, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, that: Dual) -> Dual {
        Dual::new(self.x + that.x, self.d + that.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, that: Dual) -> Dual {
        Dual::new(self.x * that.x, self.d * that.x + that.d * self.x)
    }
}

impl Scalar for Dual {
    fn constant(c: f64) -> Self {
        Dual::new(c, 0.0)
    }
}

impl Number for Dual {
    fn lift(&self, c: f64) -> Self {
        Dual::constant(c)
    }
    fn add(&self, other: &Self) -> Self {
        *self + *other
    }
    fn mul(&self, other: &Self) -> Self {
        *self * *other
    }
}

/// Seeds the tangent with 1 and returns the result tangent.
pub fn grad_dual(f: impl Fn(Dual) -> Dual, x0: f64) -> f64 {
    f(Dual::new(x0, 1.0)).d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(grad_dual(|x| x * x, 3.0), 6.0);
        let two = Dual::constant(2.0);
        for x in [-2.0, -1.0, 0.5, 3.0] {
            assert_eq!(grad_dual(|x| two * x + x * x * x, x), 2.0 + 3.0 * x * x);
        }
        assert_eq!(grad_dual(|_| Dual::constant(4.0), 1.0), 0.0);
    }
}
