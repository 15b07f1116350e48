use crate::runtime::{derivative_tagged, ArithFn, Tagged};

/// First or second derivative of a host function over tagged duals. Each
/// derivative taken uses its own tag.
pub fn grad_forward_tagged(f: &dyn Fn(&Tagged) -> Tagged, x0: f64, order: u8) -> f64 {
    let x = Tagged::real(x0);
    match order {
        1 => derivative_tagged(f, &x).primal(),
        2 => derivative_tagged(&|y| derivative_tagged(f, y), &x).primal(),
        _ => panic!("order must be 1 or 2, got {order}"),
    }
}

pub fn grad_forward_tagged_fn(f: &ArithFn, x0: f64, order: u8) -> f64 {
    grad_forward_tagged(&|x| f.eval(x.clone()), x0, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::runtime::{grad_dual, Dual};

    #[test]
    fn orders() {
        let f = ArithFn::compile(&parse("(lam x (+ (* 2.0 x) (* (* x x) x)))").unwrap()).unwrap();
        assert_eq!(grad_forward_tagged_fn(&f, 1.0, 2), 6.0);
        for x in [-2.0, 0.5, 3.0] {
            let tagged = grad_forward_tagged_fn(&f, x, 1);
            let dual = grad_dual(|d: Dual| f.eval(d), x);
            assert_eq!(tagged.to_bits(), dual.to_bits());
        }
    }
}
