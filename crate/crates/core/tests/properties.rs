use adlc_core::gradcheck::{random_program, CorpusSpec, Mode};
use adlc_core::lang::{alpha_eq, apply_real, eval_closed, freshen, is_anf, Value};
use adlc_core::reverse::ReverseVariant;
use adlc_core::runtime::cps::CpsRun;
use adlc_core::runtime::tape::grad_tape_traced;
use adlc_core::runtime::{AdjointMap, ArithFn};
use adlc_core::{anf, parse, prepare, pretty, Expr};
use proptest::prelude::*;

fn constant() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(-2.5), -4.0f64..4.0]
}

/// Nested arithmetic over `x`, with lets binding `a`/`b`.
fn arith() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![constant().prop_map(Expr::Const), Just(Expr::var("x"))];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (
                prop_oneof![Just("a"), Just("b")],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(n, a, b)| {
                    let b = b.rename_free("x", n);
                    Expr::let_(n, a, b)
                }),
        ]
    })
}

/// Well-formed syntax trees over every surface form the printer handles.
fn any_expr() -> impl Strategy<Value = Expr> {
    let names = prop_oneof![Just("x"), Just("y"), Just("k"), Just("f")];
    let leaf = prop_oneof![
        constant().prop_map(Expr::Const),
        Just(Expr::Unit),
        names.clone().prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 48, 3, move |inner| {
        let n = names.clone();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::gt(a, b)),
            (n.clone(), inner.clone()).prop_map(|(x, b)| Expr::lam(x, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::app(a, b)),
            (n.clone(), inner.clone(), inner.clone()).prop_map(|(x, a, b)| Expr::let_(x, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::pair(a, b)),
            inner.clone().prop_map(Expr::fst),
            inner.clone().prop_map(Expr::inr),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Expr::if_(c, a, b)),
            (
                inner.clone(),
                n.clone(),
                inner.clone(),
                n.clone(),
                inner.clone()
            )
                .prop_map(|(s, a, e1, b, e2)| Expr::case(s, a, e1, b, e2)),
            inner.clone().prop_map(Expr::ref_),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::assign(a, b)),
            (n.clone(), inner.clone()).prop_map(|(k, b)| Expr::shift(k, b)),
            inner.clone().prop_map(Expr::reset),
            (n.clone(), n, inner.clone(), inner).prop_map(|(f, x, b, r)| Expr::letrec(f, x, b, r)),
        ]
    })
}

fn real(v: Value<'_>) -> f64 {
    v.as_real().expect("real result")
}

fn closed_real(src: &str) -> f64 {
    let e = prepare(&parse(src).unwrap());
    real(eval_closed(&e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_then_parse_is_identity(e in any_expr()) {
        prop_assert_eq!(parse(&pretty(&e)).unwrap(), e);
    }

    #[test]
    fn anf_preserves_values(e in arith(), x in -3.0f64..3.0) {
        let a = anf(&e).unwrap();
        prop_assert!(is_anf(&a));
        let before = apply_real(&Expr::lam("x", e), x).unwrap();
        let after = apply_real(&Expr::lam("x", a), x).unwrap();
        prop_assert_eq!(before.to_bits(), after.to_bits());
    }

    #[test]
    fn reset_of_value(c in constant()) {
        let src = format!("(reset {})", pretty(&Expr::Const(c)));
        prop_assert_eq!(closed_real(&src), c);
    }

    #[test]
    fn shift_resumed_once_is_plugging(body in arith(), c in constant()) {
        let plugged = Expr::let_("x", Expr::Const(c), body.clone());
        let k = Expr::app(Expr::var("k"), Expr::Const(c));
        let shifted = Expr::reset(Expr::let_("x", Expr::shift("k", k), body));
        let a = real(eval_closed(&plugged).unwrap());
        let b = real(eval_closed(&shifted).unwrap());
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn shift_that_ignores_k_aborts(body in arith(), c in constant()) {
        let e = Expr::reset(Expr::let_("x", Expr::shift("k", Expr::Const(c)), body));
        prop_assert_eq!(real(eval_closed(&e).unwrap()), c);
    }

    #[test]
    fn adjoint_merge_laws(
        a in prop::collection::vec((0usize..6, -8i32..8), 0..6),
        b in prop::collection::vec((0usize..6, -8i32..8), 0..6),
        c in prop::collection::vec((0usize..6, -8i32..8), 0..6),
    ) {
        // Small integers keep every sum exact, so the laws hold bitwise.
        let map = |v: &[(usize, i32)]| {
            v.iter().fold(AdjointMap::<f64>::new(), |m, &(id, d)| m.accumulate(id, d as f64))
        };
        let (a, b, c) = (map(&a), map(&b), map(&c));
        prop_assert_eq!(a.merge(&AdjointMap::new()), a.clone());
        prop_assert_eq!(a.merge(&b), b.merge(&a));
        prop_assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
        for id in 0..6 {
            prop_assert_eq!(a.merge(&b).get(id), a.get(id) + b.get(id));
        }
    }

    #[test]
    fn tape_replays_the_cps_updates(e in arith(), x in -3.0f64..3.0) {
        let f = ArithFn::compile(&Expr::lam("x", e)).unwrap();
        let mut tape_trace = Vec::new();
        let g_tape = grad_tape_traced(|v| f.eval(v), x, Some(&mut tape_trace));
        let mut run = CpsRun::tracing();
        let z = run.var(x);
        run.eval(&f, z, &mut |run, r| run.set_adjoint(r, 1.0));
        let g_cps = run.adjoint(z);
        prop_assert_eq!(g_tape.to_bits(), g_cps.to_bits());
        prop_assert_eq!(run.trace().unwrap(), tape_trace.as_slice());
    }

    #[test]
    fn freshen_is_deterministic_and_alpha_preserving(e in any_expr()) {
        let a = freshen(&e);
        prop_assert_eq!(&a, &freshen(&e));
        prop_assert!(alpha_eq(&a, &e));
    }

    #[test]
    fn meta_shift_and_full_cps_agree(seed in 0u64..1000, index in 0usize..50) {
        let spec = CorpusSpec { seed, ..CorpusSpec::default() };
        let f = random_program(&spec, index);
        let Expr::Lam(_, body) = &f else { unreachable!() };
        let meta = ReverseVariant::MetaShift.transform(body).unwrap();
        let cps = ReverseVariant::FullCps.transform(body).unwrap();
        prop_assert!(alpha_eq(&meta, &cps));
    }

    #[test]
    fn reverse_family_is_bitwise_consistent(e in arith(), x in -3.0f64..3.0) {
        let f = Expr::lam("x", e);
        let want = Mode::Tape.derivative(&f, x, None).unwrap();
        for m in Mode::REVERSE_CLASS {
            let got = m.derivative(&f, x, None).unwrap();
            prop_assert_eq!(got.to_bits(), want.to_bits(), "{}", m);
        }
    }

    #[test]
    fn forward_family_is_bitwise_consistent(e in arith(), x in -3.0f64..3.0) {
        let f = Expr::lam("x", e);
        let want = Mode::Dual.derivative(&f, x, None).unwrap();
        for m in Mode::FORWARD_CLASS {
            let got = m.derivative(&f, x, None).unwrap();
            prop_assert_eq!(got.to_bits(), want.to_bits(), "{}", m);
        }
    }
}
