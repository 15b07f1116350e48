//! Dual numbers carrying an invocation tag, so that nested derivatives keep
//! their perturbations apart.

use super::Number;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_TAG: AtomicU64 = AtomicU64::new(1);

/// A fresh tag, strictly greater than every tag issued before it.
pub fn fresh_tag() -> u64 {
    NEXT_TAG.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug)]
pub enum Tagged {
    Real(f64),
    Dual(Arc<TaggedDual>),
}

#[derive(Debug)]
pub struct TaggedDual {
    pub x: Tagged,
    pub d: Tagged,
    pub tag: u64,
}

impl Tagged {
    pub fn real(v: f64) -> Tagged {
        Tagged::Real(v)
    }

    pub fn dual(x: Tagged, d: Tagged, tag: u64) -> Tagged {
        Tagged::Dual(Arc::new(TaggedDual { x, d, tag }))
    }

    /// 0 for plain reals.
    pub fn tag(&self) -> u64 {
        match self {
            Tagged::Real(_) => 0,
            Tagged::Dual(d) => d.tag,
        }
    }

    /// Primal and tangent with respect to `tag`; values of another tag are
    /// constants there.
    pub fn split(&self, tag: u64) -> (Tagged, Tagged) {
        match self {
            Tagged::Dual(d) if d.tag == tag => (d.x.clone(), d.d.clone()),
            other => (other.clone(), Tagged::Real(0.0)),
        }
    }

    pub fn tangent(&self, tag: u64) -> Tagged {
        self.split(tag).1
    }

    /// The innermost real.
    pub fn primal(&self) -> f64 {
        let mut cur = self;
        loop {
            match cur {
                Tagged::Real(v) => return *v,
                Tagged::Dual(d) => cur = &d.x,
            }
        }
    }
}

impl Number for Tagged {
    fn lift(&self, c: f64) -> Self {
        Tagged::Real(c)
    }

    fn add(&self, other: &Self) -> Self {
        if let (Tagged::Real(a), Tagged::Real(b)) = (self, other) {
            return Tagged::Real(a + b);
        }
        let t = self.tag().max(other.tag());
        let (ax, ad) = self.split(t);
        let (bx, bd) = other.split(t);
        Tagged::dual(ax.add(&bx), ad.add(&bd), t)
    }

    fn mul(&self, other: &Self) -> Self {
        if let (Tagged::Real(a), Tagged::Real(b)) = (self, other) {
            return Tagged::Real(a * b);
        }
        let t = self.tag().max(other.tag());
        let (ax, ad) = self.split(t);
        let (bx, bd) = other.split(t);
        Tagged::dual(ax.mul(&bx), ad.mul(&bx).add(&bd.mul(&ax)), t)
    }
}

/// Derivative of `f` at `x` under a tag fresh to this invocation. `x` may
/// itself carry outer perturbations, which is what makes nesting work.
pub fn derivative_tagged(f: &dyn Fn(&Tagged) -> Tagged, x: &Tagged) -> Tagged {
    let tag = fresh_tag();
    f(&Tagged::dual(x.clone(), Tagged::Real(1.0), tag)).tangent(tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(x: &Tagged) -> Tagged {
        x.lift(2.0).mul(x).add(&x.mul(x).mul(x))
    }

    #[test]
    fn nested() {
        let d1 = derivative_tagged(&cubic, &Tagged::real(2.0)).primal();
        assert_eq!(d1, 14.0);
        let d2 = derivative_tagged(&|x| derivative_tagged(&cubic, x), &Tagged::real(1.0));
        assert_eq!(d2.primal(), 6.0);
    }

    #[test]
    fn tags_increase() {
        let a = fresh_tag();
        assert!(fresh_tag() > a);
    }
}
