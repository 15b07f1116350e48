//! Gradient descent driven by any first-order mode.

use super::Mode;
use crate::lang::eval::{apply_real_with_limit, DEFAULT_FRAME_LIMIT};
use crate::lang::{prepare, Expr};
use crate::Error;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Step {
    pub x: f64,
    pub fx: f64,
}

pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Iterates `x <- x - rate * f'(x)` and returns every point visited,
/// starting with `x0`.
pub fn gradient_descent(
    f: &Expr,
    x0: f64,
    rate: f64,
    steps: usize,
    mode: Mode,
) -> Result<Vec<Step>, Error> {
    if mode.order() != 1 {
        return Err(Error::Unsupported(format!("{mode} is not a gradient mode")));
    }
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rate must be non-negative, got {rate}"
        )));
    }
    let p = prepare(f);
    let value = |x: f64| apply_real_with_limit(&p, x, DEFAULT_FRAME_LIMIT);
    let mut x = x0;
    let mut out = vec![Step { x, fx: value(x)? }];
    for step in 1..=steps {
        x -= rate * mode.derivative(f, x, None)?;
        if x.is_nan() || x.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged { step, x });
        }
        out.push(Step { x, fx: value(x)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    const QUADRATIC: &str = "(lam x (+ (+ (* x x) (* -6.0 x)) 9.0))";
    const SQUARED: &str = "(lam x (* (+ x -3.0) (+ x -3.0)))";

    #[test]
    fn converges_monotonically() {
        let f = parse(SQUARED).unwrap();
        let t = gradient_descent(&f, 0.0, 0.1, 100, Mode::ReverseMetaShift).unwrap();
        assert_eq!(t.len(), 101);
        assert!((t[100].x - 3.0).abs() < 1e-3);
        assert!(t.windows(2).all(|w| w[1].fx <= w[0].fx));
    }

    #[test]
    fn expanded_form_converges() {
        // Once x is near 3 the expanded loss is cancellation noise, so only
        // the iterate is checked.
        let f = parse(QUADRATIC).unwrap();
        let t = gradient_descent(&f, 0.0, 0.1, 100, Mode::Dual).unwrap();
        assert!((t[100].x - 3.0).abs() < 1e-3);
    }

    #[test]
    fn edge_cases() {
        let f = parse(QUADRATIC).unwrap();
        assert_eq!(
            gradient_descent(&f, 1.0, 0.1, 0, Mode::Dual).unwrap(),
            vec![Step { x: 1.0, fx: 4.0 }]
        );
        let still = gradient_descent(&f, 1.0, 0.0, 5, Mode::Tape).unwrap();
        assert!(still.iter().all(|s| s.x == 1.0));
        let err = gradient_descent(&f, 1.0, 10.0, 100, Mode::Tape).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
        assert!(gradient_descent(&f, 1.0, -1.0, 1, Mode::Tape).is_err());
    }
}
