//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use adlc_core::forward::{fwd_transform, symbolic_diff};
use adlc_core::gradcheck::corpus::DEFAULT_PROBES;
use adlc_core::gradcheck::{crosscheck, gradient_descent, CheckConfig, CorpusSpec, Mode};
use adlc_core::reverse::{grad_reverse, has_eta_redex, has_let_of_variable, ReverseVariant};
use adlc_core::runtime::perturbation_confusion_probe;
use adlc_core::staging::*;
use adlc_core::{anf, parse, prepare, Expr};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<(), String>;

const CUBIC: &str = "(lam x (+ (* 2.0 x) (* (* x x) x)))";
const SQUARE: &str = "(lam x (* x x))";
const IF: &str = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
const IF_THEN_MORE: &str = "(lam x (* (if (> x 0.0) (* -1.0 x) x) (+ x 1.0)))";
const WHILE: &str = "(lam x (letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f x)))";
const TREE_BODY: &str = "(lam l (lam r (lam v (* (* l r) v))))";
const DESCENT: &str = "(lam x (* (+ x -3.0) (+ x -3.0)))";
const PROBES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Relative agreement; a zero target must be hit exactly.
fn close(got: f64, want: f64, tol: f64) -> bool {
    if want == 0.0 {
        got == 0.0
    } else {
        (got - want).abs() <= tol * want.abs()
    }
}

fn p(src: &str) -> Expr {
    parse(src).unwrap()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn within(start: Instant, budget: Duration) -> Outcome {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:?}, budget {budget:?}"))
}

fn control_flow_examples() -> Vec<Expr> {
    [IF, IF_THEN_MORE, WHILE].iter().map(|s| p(s)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let f = p(CUBIC);
    let first: Vec<Mode> = Mode::ALL.into_iter().filter(|m| m.order() == 1).collect();
    ensure(first.len() == 10, || {
        format!("expected 10 gradient modes, have {}", first.len())
    })?;
    for m in first {
        for x in PROBES {
            let want = 2.0 + 3.0 * x * x;
            let got = m.derivative(&f, x, None).map_err(err)?;
            ensure(close(got, want, 1e-10), || {
                format!("{m} at {x}: {got}, want {want}")
            })?;
        }
    }
    within(start, Duration::from_secs(1))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let f = p(CUBIC);
    for m in [Mode::Forward2, Mode::ForwardOverReverse, Mode::Reverse2] {
        for x in PROBES {
            let got = m.derivative(&f, x, None).map_err(err)?;
            ensure(close(got, 6.0 * x, 1e-9), || {
                format!("{m} at {x}: {got}, want {}", 6.0 * x)
            })?;
        }
    }
    within(start, Duration::from_secs(1))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let r = perturbation_confusion_probe();
    ensure(r.naive_inner == 2.0, || {
        format!("naive inner {}", r.naive_inner)
    })?;
    ensure(r.tagged_inner == 1.0, || {
        format!("tagged inner {}", r.tagged_inner)
    })?;
    within(start, Duration::from_secs(1))
}

fn staged_case(src: &str, x: f64, want: f64) -> Outcome {
    let start = Instant::now();
    let f = p(src);
    let prog = stage_reverse(&f).map_err(err)?;
    let got = ir_eval(&prog, x).map_err(err)?;
    ensure(close(got, want, 1e-12), || {
        format!("{src} at {x}: {got}, want {want}")
    })?;
    let unstaged = grad_reverse(&f, x, ReverseVariant::MetaShift).map_err(err)?;
    ensure(got.to_bits() == unstaged.to_bits(), || {
        format!("{src} at {x}: staged {got} vs unstaged {unstaged}")
    })?;
    within(start, Duration::from_secs(1))
}

fn criterion_4() -> Outcome {
    staged_case(IF, 2.0, -4.0)?;
    staged_case(IF, -2.0, -4.0)?;
    staged_case(WHILE, 8.0, 0.125)?;

    let start = Instant::now();
    let body = p(TREE_BODY);
    let tree = Tree::parse("(node 3.0 (leaf) (leaf))").map_err(err)?;
    let prog = stage_tree(&body).map_err(err)?;
    let got = ir_eval_tree(&prog, &tree, 2.0).map_err(err)?;
    ensure(close(got, 12.0, 1e-12), || format!("tree: {got}, want 12"))?;
    let unstaged =
        grad_reverse(&tree_program(&body, &tree), 2.0, ReverseVariant::MetaShift).map_err(err)?;
    ensure(got.to_bits() == unstaged.to_bits(), || {
        format!("tree: staged {got} vs unstaged {unstaged}")
    })?;
    within(start, Duration::from_secs(1))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let spec = CorpusSpec::default();
    ensure(
        spec.seed == 42 && spec.count == 200 && spec.max_ops == 12,
        || format!("{spec:?}"),
    )?;
    let reports = crosscheck(&spec, &DEFAULT_PROBES, &CheckConfig::default());
    ensure(reports.len() == 1200, || {
        format!("{} reports", reports.len())
    })?;
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    ensure(failed.is_empty(), || {
        format!(
            "{} of {} failed; first: {}",
            failed.len(),
            reports.len(),
            failed[0]
        )
    })?;
    within(start, Duration::from_secs(30))
}

fn criterion_6() -> Outcome {
    let spec = CorpusSpec::default();
    let mut programs = spec.programs();
    programs.extend(control_flow_examples());
    for (i, f) in programs.iter().enumerate() {
        let f = prepare(f);
        for v in [ReverseVariant::MetaShift, ReverseVariant::FullCps] {
            let Expr::Lam(_, body) = &f else {
                return Err(format!("program {i} is not a lambda"));
            };
            let out = v.transform(body).map_err(err)?;
            ensure(!out.has_control(), || {
                format!("{v:?} output of program {i} has shift/reset")
            })?;
            ensure(!has_eta_redex(&out), || {
                format!("{v:?} output of program {i} has an eta-redex")
            })?;
            ensure(!has_let_of_variable(&out), || {
                format!("{v:?} output of program {i} has a let of a variable")
            })?;
        }
    }
    for src in [IF, IF_THEN_MORE] {
        let prog = stage_reverse(&p(src)).map_err(err)?;
        let n = seed_count(&prog);
        ensure(n == 1, || {
            format!("{src}: continuation body appears {n} times")
        })?;
    }
    let prog = stage_reverse(&p(WHILE)).map_err(err)?;
    let loops: Vec<_> = prog
        .functions
        .iter()
        .filter(|f| f.name.starts_with("loop"))
        .collect();
    ensure(!loops.is_empty(), || {
        "WHILE produced no loop function".into()
    })?;
    for f in loops {
        ensure(self_calls_in_tail(f), || {
            format!("{} has a non-tail self-call", f.name)
        })?;
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let mut programs = CorpusSpec::default().programs();
    programs.extend(control_flow_examples());
    programs.push(p(SQUARE));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (i, f) in programs.iter().enumerate() {
        let prog = stage_reverse(f).map_err(err)?;
        let opt = ir_optimize(&prog);
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let a = ir_eval(&prog, x).map_err(err)?;
            let b = ir_eval(&opt, x).map_err(err)?;
            ensure(a == b, || {
                format!("program {i} at {x}: {a} before, {b} after optimizing")
            })?;
        }
    }
    let prog = stage_reverse(&p(SQUARE)).map_err(err)?;
    let opt = ir_optimize(&prog);
    ensure(opt.cell_op_count() == 0, || {
        format!("{} cell ops remain", opt.cell_op_count())
    })?;
    ensure(opt.stmt_count() < prog.stmt_count(), || {
        "no statements removed".into()
    })?;
    let text = emit_c(&opt);
    ensure(text.contains("2 * in"), || {
        format!("emitted text lacks `2 * in`:\n{text}")
    })
}

fn criterion_8() -> Outcome {
    for (i, f) in CorpusSpec::default().programs().iter().enumerate() {
        let n = f.node_count();
        let fwd = fwd_transform(f).map_err(err)?.node_count();
        ensure(fwd <= 6 * n + 10, || {
            format!("program {i}: forward {fwd} nodes from {n}")
        })?;
        let Expr::Lam(x, body) = f else {
            return Err(format!("program {i} is not a lambda"));
        };
        let a = anf(body).map_err(err)?;
        let na = a.node_count();
        let sym = symbolic_diff(&a, x).map_err(err)?.node_count();
        ensure(sym <= 6 * na + 10, || {
            format!("program {i}: symbolic {sym} nodes from {na}")
        })?;
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let t = gradient_descent(&p(DESCENT), 0.0, 0.1, 100, Mode::ReverseMetaShift).map_err(err)?;
    let last = t.last().unwrap().x;
    ensure((last - 3.0).abs() < 1e-3, || format!("ended at {last}"))?;
    for (i, w) in t.windows(2).enumerate() {
        ensure(w[1].fx <= w[0].fx, || {
            format!("loss rose at step {}: {} -> {}", i + 1, w[0].fx, w[1].fx)
        })?;
    }
    within(start, Duration::from_secs(1))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failures = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| Err(format!("panicked: {e:?}")));
        let t = start.elapsed();
        match outcome {
            Ok(()) => println!("criterion {n}: PASS ({t:.2?})"),
            Err(msg) => {
                failures += 1;
                println!("criterion {n}: FAIL ({t:.2?}) {msg}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
