use adlc_cli::run;
use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
        .display()
        .to_string()
}

fn adlc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("adlc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn grad_prints_shortest_round_trip() {
    let cubic = example("cubic.sexp");
    let (code, out, _) = adlc(&[
        "grad",
        "--mode",
        "reverse-meta-shift",
        "--at",
        "1.0",
        &cubic,
    ]);
    assert_eq!((code, out.as_str()), (0, "5\n"));
    let (code, out, _) = adlc(&["grad", "--mode", "dual", "--at", "-2,0.5", &cubic]);
    assert_eq!((code, out.as_str()), (0, "14\n2.75\n"));
}

#[test]
fn every_grad_mode_name_is_accepted() {
    let cubic = example("cubic.sexp");
    for mode in [
        "forward",
        "dual",
        "cps",
        "tape",
        "functional",
        "reverse-target-shift",
        "reverse-meta-shift",
        "reverse-cps-full",
        "staged",
    ] {
        let (code, out, err) = adlc(&["grad", "--mode", mode, "--at", "2", &cubic]);
        assert_eq!((code, out.as_str()), (0, "14\n"), "{mode}: {err}");
    }
    for mode in ["forward2", "reverse2"] {
        let (code, out, _) = adlc(&["grad", "--mode", mode, "--at", "2", &cubic]);
        assert_eq!((code, out.as_str()), (0, "12\n"), "{mode}");
    }
}

#[test]
fn staged_control_flow_and_trees() {
    let (_, out, _) = adlc(&[
        "grad",
        "--mode",
        "staged",
        "--at",
        "-2,2",
        &example("branch.sexp"),
    ]);
    assert_eq!(out, "-4\n-4\n");
    let (_, out, _) = adlc(&[
        "grad",
        "--mode",
        "staged",
        "--at",
        "8",
        &example("halve.sexp"),
    ]);
    assert_eq!(out, "0.125\n");
    let tree = example("one-node.tree");
    for mode in ["staged", "reverse-meta-shift"] {
        let (code, out, _) = adlc(&[
            "grad",
            "--mode",
            mode,
            "--at",
            "2",
            "--tree",
            &tree,
            &example("fold.sexp"),
        ]);
        assert_eq!((code, out.as_str()), (0, "12\n"), "{mode}");
    }
}

#[test]
fn check_reports_and_exits_zero() {
    let (code, out, _) = adlc(&["check", &example("cubic.sexp"), "--at", "1.0"]);
    assert_eq!(code, 0);
    assert!(
        out.starts_with(&format!("{}\t1\tPASS", example("cubic.sexp"))),
        "{out}"
    );
    let (code, out, _) = adlc(&["check", "--corpus", "--count", "3", "--at", "0.5", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[0]["pass"], true);
}

#[test]
fn failed_check_exits_two() {
    let (code, out, err) = adlc(&[
        "check",
        &example("cubic.sexp"),
        "--at",
        "1.0",
        "--h",
        "0.5",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("FAIL"));
    assert!(err.contains("check failed"));
}

#[test]
fn codegen_writes_the_optimized_square() {
    let path = std::env::temp_dir().join(format!("adlc-square-{}.c", std::process::id()));
    let p = path.display().to_string();
    let (code, out, _) = adlc(&["codegen", "--opt", "all", &example("square.sexp"), "-o", &p]);
    assert_eq!((code, out.as_str()), (0, ""));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.contains("2 * in"), "{text}");
    let (_, unopt, _) = adlc(&["codegen", &example("square.sexp")]);
    assert!(unopt.contains("d0 += "), "{unopt}");
}

#[test]
fn program_errors_exit_one() {
    let (code, _, err) = adlc(&[
        "grad",
        "--mode",
        "tape",
        "--at",
        "1",
        &example("branch.sexp"),
    ]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: tape:"), "{err}");
    let (code, _, err) = adlc(&["parse", "/nonexistent/file.sexp"]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"));
    let (code, _, _) = adlc(&[
        "grad",
        "--mode",
        "sideways",
        "--at",
        "1",
        &example("cubic.sexp"),
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = adlc(&["check"]);
    assert_eq!(code, 1);
    let (code, out, _) = adlc(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("codegen"));
}

#[test]
fn depth_limit_flag_and_descent() {
    let halve = example("halve.sexp");
    let (code, _, err) = adlc(&[
        "--depth-limit",
        "5",
        "grad",
        "--mode",
        "staged",
        "--at",
        "100",
        &halve,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("depth limit 5"), "{err}");
    let (code, out, _) = adlc(&[
        "descend",
        "--rate",
        "0.1",
        "--steps",
        "100",
        &example("descent.sexp"),
    ]);
    assert_eq!(code, 0);
    let last: Vec<&str> = out.lines().last().unwrap().split('\t').collect();
    assert_eq!(last[0], "100");
    assert!((last[1].parse::<f64>().unwrap() - 3.0).abs() < 1e-3);
}

#[test]
fn simple_subcommands() {
    let cubic = example("cubic.sexp");
    assert_eq!(
        adlc(&["parse", &cubic]).1,
        "(lam x (+ (* 2.0 x) (* (* x x) x)))\n"
    );
    assert_eq!(adlc(&["eval", "--at", "1,2", &cubic]).1, "3\n12\n");
    assert!(adlc(&["anf", &cubic]).1.starts_with("(lam x (let "));
    let (code, out, _) = adlc(&["transform", "--mode", "reverse-cps-full", &cubic]);
    assert_eq!(code, 0);
    assert!(!out.contains("shift") && !out.contains("reset"));
    let (code, alias, _) = adlc(&["transform", "--mode", "reverse-full-cps", &cubic]);
    assert_eq!((code, alias), (0, out));
    let (code, out, _) = adlc(&["demo"]);
    assert_eq!(code, 0);
    assert!(!out.contains("\tNO\n"));
}

#[test]
fn binary_honours_the_environment_limit() {
    let out = Command::new(env!("CARGO_BIN_EXE_adlc"))
        .args([
            "grad",
            "--mode",
            "staged",
            "--at",
            "100",
            &example("halve.sexp"),
        ])
        .env("ADLC_DEPTH_LIMIT", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth limit 3"));
}
