//! Deterministic random straight-line programs.

use crate::lang::Expr;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    /// Each program has between 1 and `max_ops` operations.
    pub max_ops: usize,
    /// Relative weights for a parameter being a constant, the input, or an
    /// earlier binding.
    pub weights: [u32; 3],
    /// Constants have magnitude in `[const_min, const_max]` and either sign.
    pub const_min: f64,
    pub const_max: f64,
    /// Products are replaced by sums when the value could exceed
    /// `magnitude_cap` for some input with `|x| <= input_radius`.
    pub input_radius: f64,
    pub magnitude_cap: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 42,
            count: 200,
            max_ops: 12,
            weights: [1, 2, 2],
            const_min: 0.5,
            const_max: 2.0,
            input_radius: 2.0,
            magnitude_cap: 1e4,
        }
    }
}

/// Probe points used by the default cross-check.
pub const DEFAULT_PROBES: [f64; 6] = [-2.0, -1.25, -0.5, 0.25, 1.0, 1.75];

impl CorpusSpec {
    pub fn programs(&self) -> Vec<Expr> {
        (0..self.count).map(|i| random_program(self, i)).collect()
    }
}

/// Program `index` of the corpus: `λx. let y1 = p ⊕ q in ... in yn`.
pub fn random_program(spec: &CorpusSpec, index: usize) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let n = rng.gen_range(1..=spec.max_ops.max(1));
    let kinds = WeightedIndex::new(spec.weights).expect("corpus weights must not all be zero");
    let mut bounds: Vec<f64> = Vec::with_capacity(n);
    let mut ops = Vec::with_capacity(n);

    for _ in 0..n {
        let param = |rng: &mut ChaCha8Rng| -> (Expr, f64) {
            loop {
                match kinds.sample(rng) {
                    0 => {
                        let mag = rng.gen_range(spec.const_min..=spec.const_max);
                        let c = if rng.gen_bool(0.5) { mag } else { -mag };
                        return (Expr::Const(c), mag);
                    }
                    1 => return (Expr::var("x"), spec.input_radius),
                    _ if bounds.is_empty() => continue,
                    _ => {
                        let j = rng.gen_range(0..bounds.len());
                        return (Expr::var(format!("y{}", j + 1)), bounds[j]);
                    }
                }
            }
        };
        let (a, ba) = param(&mut rng);
        let (b, bb) = param(&mut rng);
        let mul = rng.gen_bool(0.5) && ba * bb <= spec.magnitude_cap;
        let (e, bound) = if mul {
            (Expr::mul(a, b), ba * bb)
        } else {
            (Expr::add(a, b), ba + bb)
        };
        bounds.push(bound);
        ops.push(e);
    }

    let mut body = Expr::var(format!("y{n}"));
    for (i, e) in ops.into_iter().enumerate().rev() {
        body = Expr::let_(format!("y{}", i + 1), e, body);
    }
    Expr::lam("x", body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::apply_real;

    #[test]
    fn deterministic_and_bounded() {
        let spec = CorpusSpec::default();
        for i in 0..spec.count {
            let p = random_program(&spec, i);
            assert_eq!(p, random_program(&spec, i));
            for x in DEFAULT_PROBES {
                let v = apply_real(&p, x).unwrap();
                assert!(v.is_finite() && v.abs() < 1e8, "program {i} at {x}: {v}");
            }
        }
    }

    #[test]
    fn single_op_programs() {
        let spec = CorpusSpec {
            max_ops: 1,
            ..CorpusSpec::default()
        };
        for i in 0..20 {
            let Expr::Lam(_, body) = random_program(&spec, i) else {
                panic!()
            };
            let Expr::Let(y, _, rest) = *body else {
                panic!()
            };
            assert_eq!(*rest, Expr::var(y));
        }
    }
}
