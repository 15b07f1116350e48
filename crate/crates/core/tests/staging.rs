use adlc_core::parse;
use adlc_core::reverse::{grad_reverse, ReverseVariant};
use adlc_core::staging::*;

const SQUARE: &str = "(lam x (* x x))";
const IF: &str = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
const WHILE: &str = "(lam x (letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f x)))";
const TREE_BODY: &str = "(lam l (lam r (lam v (* (* l r) v))))";

fn staged(src: &str) -> IrProgram {
    stage_reverse(&parse(src).unwrap()).unwrap()
}

fn unstaged(src: &str, x: f64) -> f64 {
    grad_reverse(&parse(src).unwrap(), x, ReverseVariant::MetaShift).unwrap()
}

#[test]
fn square_runs_and_optimizes_to_scalar_code() {
    let p = staged(SQUARE);
    assert_eq!(ir_eval(&p, 3.0).unwrap(), 6.0);
    let o = ir_optimize(&p);
    assert_eq!(o.cell_op_count(), 0);
    assert!(o.stmt_count() < p.stmt_count());
    assert!(emit_c(&o).contains("2 * in"));
    assert_eq!(ir_eval(&o, 3.0).unwrap(), 6.0);
}

#[test]
fn branch_gradient_matches_unstaged() {
    let p = staged(IF);
    assert_eq!(seed_count(&p), 1);
    for x in [2.0, -2.0] {
        let g = ir_eval(&p, x).unwrap();
        assert_eq!(g, -4.0);
        assert_eq!(g.to_bits(), unstaged(IF, x).to_bits());
    }
}

#[test]
fn loop_gradient_matches_unstaged() {
    let p = staged(WHILE);
    let g = ir_eval(&p, 8.0).unwrap();
    assert_eq!(g, 0.125);
    assert_eq!(g.to_bits(), unstaged(WHILE, 8.0).to_bits());
    let loops: Vec<_> = p
        .functions
        .iter()
        .filter(|f| f.name.starts_with("loop"))
        .collect();
    assert_eq!(loops.len(), 1);
    assert!(self_calls_in_tail(loops[0]));
}

#[test]
fn deep_loop_stays_within_the_executor_stack() {
    let src = "(lam x (letrec f (lam n (if (> n 0.0) (app f (+ n -1.0)) n)) (app f x)))";
    let p = staged(src);
    assert_eq!(ir_eval(&p, 99_000.0).unwrap(), 1.0);
}

#[test]
fn depth_limit_is_reported() {
    let src = "(lam x (letrec f (lam n (if (> n 0.0) (app f (+ n -1.0)) n)) (app f x)))";
    let p = staged(src);
    assert!(matches!(
        ir_eval_with_limit(&p, 100.0, 10),
        Err(IrError::DepthExceeded(10))
    ));
}

#[test]
fn tree_fold_gradients() {
    let body = parse(TREE_BODY).unwrap();
    let p = stage_tree(&body).unwrap();
    let cases = [
        ("(node 3.0 (leaf) (leaf))", 2.0, 12.0),
        ("(leaf)", 2.0, 1.0),
        // 3x^2 * x * 2 = 6x^3
        ("(node 2.0 (node 3.0 (leaf) (leaf)) (leaf))", 2.0, 72.0),
    ];
    for (t, x, want) in cases {
        let tree = Tree::parse(t).unwrap();
        let g = ir_eval_tree(&p, &tree, x).unwrap();
        assert_eq!(g, want, "{t}");
        let prog = tree_program(&body, &tree);
        let u = grad_reverse(&prog, x, ReverseVariant::MetaShift).unwrap();
        assert_eq!(g.to_bits(), u.to_bits(), "{t}");
        assert_eq!(ir_eval_tree(&ir_optimize(&p), &tree, x).unwrap(), g);
    }
}

#[test]
fn optimizer_reaches_a_fixpoint_and_preserves_results() {
    for src in [SQUARE, IF, WHILE, "(lam x (+ (* 2.0 x) (* (* x x) x)))"] {
        let p = staged(src);
        let o = ir_optimize(&p);
        assert_eq!(ir_optimize(&o), o);
        for x in [-2.5, -1.0, 0.0, 0.5, 3.0] {
            assert_eq!(
                ir_eval(&o, x).unwrap(),
                ir_eval(&p, x).unwrap(),
                "{src} at {x}"
            );
        }
    }
}

#[test]
fn emitted_text_is_deterministic() {
    let a = emit_c(&staged(IF));
    let b = emit_c(&staged(IF));
    assert_eq!(a, b);
    assert!(a.starts_with("double Snippet(double in) {\n"));
    assert!(a.contains("(double x, double& d)"));
}

#[test]
fn tree_parse_rejects_malformed_input() {
    assert!(Tree::parse("(node x (leaf) (leaf))").is_err());
    assert!(Tree::parse("(node 1.0 (leaf))").is_err());
    assert_eq!(Tree::parse("(node 1.0 (leaf) (leaf))").unwrap().size(), 1);
}
