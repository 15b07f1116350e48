use adlc_core::gradcheck::{random_program, CorpusSpec};
use adlc_core::staging::{ir_eval, ir_optimize, stage_reverse};
use adlc_core::{parse, Mode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const CUBIC: &str = "(lam x (+ (* 2.0 x) (* (* x x) x)))";
const WHILE: &str = "(lam x (letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f x)))";

fn modes(c: &mut Criterion) {
    let f = parse(CUBIC).unwrap();
    let mut g = c.benchmark_group("cubic");
    for m in Mode::ALL {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| m.derivative(black_box(&f), black_box(1.5), None).unwrap())
        });
    }
    g.finish();
}

fn corpus(c: &mut Criterion) {
    let spec = CorpusSpec::default();
    let programs: Vec<_> = (0..20).map(|i| random_program(&spec, i)).collect();
    let mut g = c.benchmark_group("corpus20");
    for m in [Mode::Dual, Mode::Tape, Mode::ReverseMetaShift, Mode::Staged] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| {
                programs
                    .iter()
                    .map(|f| m.derivative(f, black_box(0.75), None).unwrap())
                    .sum::<f64>()
            })
        });
    }
    g.finish();
}

fn staging(c: &mut Criterion) {
    let f = parse(WHILE).unwrap();
    c.bench_function("stage_while", |b| {
        b.iter(|| stage_reverse(black_box(&f)).unwrap())
    });
    let p = stage_reverse(&f).unwrap();
    let o = ir_optimize(&p);
    c.bench_function("optimize_while", |b| b.iter(|| ir_optimize(black_box(&p))));
    c.bench_function("ir_eval_while_1e6", |b| {
        b.iter(|| ir_eval(&o, black_box(1e6)).unwrap())
    });
}

criterion_group!(benches, modes, corpus, staging);
criterion_main!(benches);
