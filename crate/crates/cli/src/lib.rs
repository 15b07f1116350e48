//! The `adlc` command line. Every subcommand parses its inputs, calls into
//! `adlc_core`, and formats the result.

use adlc_core::forward::forward_wrapper;
use adlc_core::gradcheck::corpus::DEFAULT_PROBES;
use adlc_core::gradcheck::{check_program, crosscheck, gradient_descent};
use adlc_core::lang::eval::{apply_real_with_limit, DEFAULT_FRAME_LIMIT};
use adlc_core::runtime::perturbation_confusion_probe;
use adlc_core::staging::{
    emit_c, ir_eval_inputs, ir_eval_tree, ir_optimize, stage_reverse, stage_tree, tree_program,
    Input,
};
use adlc_core::{
    anf, parse, pretty, CheckConfig, CorpusSpec, Error, Expr, GradReport, Mode, ReverseVariant,
    Tree,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "adlc",
    version,
    about = "Differentiate, check, and stage small functional programs"
)]
pub struct Cli {
    /// Maximum evaluator frames and IR call depth.
    #[arg(long, global = true, env = "ADLC_DEPTH_LIMIT")]
    pub depth_limit: Option<usize>,
    /// Write output to this file instead of stdout.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a program and print it back in canonical form.
    Parse { file: PathBuf },
    /// Evaluate a program, applying it to each probe if it is a function.
    Eval {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Treat the program as a fold body over this tree.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Print the administrative normal form of a lambda's body.
    Anf { file: PathBuf },
    /// Print the derivative program produced by a source transformation.
    Transform {
        #[arg(long)]
        mode: TransformMode,
        file: PathBuf,
    },
    /// Print the derivative at each probe.
    Grad {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        at: Vec<f64>,
        #[arg(long)]
        tree: Option<PathBuf>,
        file: PathBuf,
    },
    /// Compare every gradient mode and finite differences.
    Check {
        /// Program to check; omit with --corpus.
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Central-difference step (default 1e-6 * max(1, |x|)).
        #[arg(long)]
        h: Option<f64>,
        /// Relative tolerance against finite differences.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Check the generated corpus instead of a file.
        #[arg(long, conflicts_with = "file")]
        corpus: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        json: bool,
    },
    /// Stage the reverse-mode gradient and emit C-like source.
    Codegen {
        #[arg(long, value_enum, default_value_t = OptLevel::None)]
        opt: OptLevel,
        /// Treat the program as a fold body over a run-time tree.
        #[arg(long)]
        tree: Option<PathBuf>,
        file: PathBuf,
    },
    /// Run gradient descent and print the trajectory.
    Descend {
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        steps: usize,
        /// Starting point.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        at: f64,
        #[arg(long, value_parser = parse_mode, default_value = "reverse-meta-shift")]
        mode: Mode,
        #[arg(long)]
        json: bool,
        file: PathBuf,
    },
    /// Run the worked examples and print a table.
    Demo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransformMode {
    Forward,
    ReverseTargetShift,
    ReverseMetaShift,
    #[value(alias = "reverse-full-cps")]
    ReverseCpsFull,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptLevel {
    None,
    All,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

/// Failures and their exit codes: 1 for unusable input or a failed
/// evaluation, 2 for a check that ran and found disagreement.
#[derive(Debug)]
enum Failure {
    Program(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Program(e.to_string())
    }
}

impl From<adlc_core::IrError> for Failure {
    fn from(e: adlc_core::IrError) -> Self {
        Failure::Program(e.to_string())
    }
}

impl From<adlc_core::TransformError> for Failure {
    fn from(e: adlc_core::TransformError) -> Self {
        Failure::Program(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Program(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Expr, Failure> {
    let text = read(path)?;
    parse(&text).map_err(|e| Failure::Program(format!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<Tree, Failure> {
    let text = read(path)?;
    Tree::parse(&text).map_err(|e| Failure::Program(format!("{}: {e}", path.display())))
}

fn lines(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v}\n")).collect()
}

/// Runs the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = out.write_all(shown.as_bytes());
                0
            } else {
                let _ = err.write_all(shown.as_bytes());
                1
            };
        }
    };
    let (text, code) = match execute(&cli) {
        Ok(text) => (text, 0),
        Err(Failure::Check(text)) => (text, 2),
        Err(Failure::Program(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return 1;
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if code == 2 {
        let _ = writeln!(err, "check failed");
    }
    code
}

fn execute(cli: &Cli) -> Outcome {
    let limit = cli.depth_limit;
    match &cli.command {
        Command::Parse { file } => Ok(format!("{}\n", pretty(&load(file)?))),
        Command::Eval { file, at, tree } => eval_cmd(&load(file)?, at, tree.as_deref(), limit),
        Command::Anf { file } => Ok(format!(
            "{}\n",
            pretty(&anf(&load(file)?).map_err(Error::from)?)
        )),
        Command::Transform { mode, file } => {
            let f = adlc_core::prepare(&load(file)?);
            let g = match mode {
                TransformMode::Forward => forward_wrapper(&f)?,
                TransformMode::ReverseTargetShift => ReverseVariant::TargetShift.wrapper(&f)?,
                TransformMode::ReverseMetaShift => ReverseVariant::MetaShift.wrapper(&f)?,
                TransformMode::ReverseCpsFull => ReverseVariant::FullCps.wrapper(&f)?,
            };
            Ok(format!("{}\n", pretty(&g)))
        }
        Command::Grad {
            mode,
            at,
            tree,
            file,
        } => {
            let f = load(file)?;
            match tree {
                Some(t) => grad_tree(*mode, &f, &load_tree(t)?, at, limit),
                None => {
                    let vals = at
                        .iter()
                        .map(|&x| mode.derivative(&f, x, limit))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Failure::Program(format!("{mode}: {e}")))?;
                    Ok(lines(vals))
                }
            }
        }
        Command::Check {
            file,
            at,
            h,
            tol,
            corpus,
            seed,
            count,
            json,
        } => {
            let cfg = CheckConfig {
                h: *h,
                fd_tol: *tol,
                limit,
                ..CheckConfig::default()
            };
            let probes: Vec<f64> = if at.is_empty() {
                DEFAULT_PROBES.to_vec()
            } else {
                at.clone()
            };
            let reports = match (file, corpus) {
                (Some(file), false) => {
                    let f = load(file)?;
                    let id = file.display().to_string();
                    probes
                        .iter()
                        .map(|&x| check_program(&id, &f, x, &cfg))
                        .collect()
                }
                (None, true) => {
                    let spec = CorpusSpec {
                        seed: *seed,
                        count: *count,
                        ..CorpusSpec::default()
                    };
                    crosscheck(&spec, &probes, &cfg)
                }
                _ => return Err(Failure::Program("check needs a FILE or --corpus".into())),
            };
            report_cmd(&reports, *json)
        }
        Command::Codegen { opt, tree, file } => {
            let f = load(file)?;
            let p = match tree {
                Some(t) => {
                    load_tree(t)?;
                    stage_tree(&f)?
                }
                None => stage_reverse(&f)?,
            };
            let p = if *opt == OptLevel::All {
                ir_optimize(&p)
            } else {
                p
            };
            Ok(emit_c(&p))
        }
        Command::Descend {
            rate,
            steps,
            at,
            mode,
            json,
            file,
        } => {
            let t = gradient_descent(&load(file)?, *at, *rate, *steps, *mode)?;
            if *json {
                return Ok(format!(
                    "{}\n",
                    serde_json::to_string(&t).expect("serializable")
                ));
            }
            let mut s = String::from("step\tx\tf(x)\n");
            for (i, st) in t.iter().enumerate() {
                let _ = writeln!(s, "{i}\t{}\t{}", st.x, st.fx);
            }
            Ok(s)
        }
        Command::Demo => demo(),
    }
}

fn eval_cmd(f: &Expr, at: &[f64], tree: Option<&Path>, limit: Option<usize>) -> Outcome {
    let frames = limit.unwrap_or(DEFAULT_FRAME_LIMIT);
    let f = match tree {
        Some(t) => tree_program(f, &load_tree(t)?),
        None => f.clone(),
    };
    let f = adlc_core::prepare(&f);
    if at.is_empty() {
        let v = adlc_core::lang::eval_closed(&f).map_err(Error::from)?;
        return Ok(format!("{}\n", v));
    }
    let vals = at
        .iter()
        .map(|&x| apply_real_with_limit(&f, x, frames))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::from)?;
    Ok(lines(vals))
}

fn grad_tree(mode: Mode, body: &Expr, tree: &Tree, at: &[f64], limit: Option<usize>) -> Outcome {
    let mut out = Vec::with_capacity(at.len());
    if mode == Mode::Staged {
        let p = stage_tree(body)?;
        for &x in at {
            out.push(match limit {
                Some(l) => ir_eval_inputs(&p, &[Input::Tree(tree.clone()), Input::Real(x)], l)?,
                None => ir_eval_tree(&p, tree, x)?,
            });
        }
    } else {
        let f = tree_program(body, tree);
        for &x in at {
            out.push(mode.derivative(&f, x, limit)?);
        }
    }
    Ok(lines(out))
}

fn report_cmd(reports: &[GradReport], json: bool) -> Outcome {
    let text = if json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(reports).expect("serializable")
        )
    } else {
        reports.iter().map(|r| format!("{r}\n")).collect()
    };
    if reports.iter().all(|r| r.pass) {
        Ok(text)
    } else {
        Err(Failure::Check(text))
    }
}

struct DemoRow {
    example: &'static str,
    how: String,
    at: String,
    got: f64,
    want: f64,
}

fn demo() -> Outcome {
    const CUBIC: &str = "(lam x (+ (* 2.0 x) (* (* x x) x)))";
    const IF: &str = "(lam x (if (> x 0.0) (* (* -1.0 x) x) (* x x)))";
    const WHILE: &str = "(lam x (letrec f (lam n (if (> n 1.0) (app f (* n 0.5)) n)) (app f x)))";
    const TREE_BODY: &str = "(lam l (lam r (lam v (* (* l r) v))))";
    const DESCENT: &str = "(lam x (* (+ x -3.0) (+ x -3.0)))";
    let p = |s: &str| parse(s).expect("built-in example parses");
    let mut rows = Vec::new();

    let cubic = p(CUBIC);
    for m in Mode::ALL {
        let want = if m.order() == 1 { 5.0 } else { 6.0 };
        rows.push(DemoRow {
            example: "2x + x^3",
            how: m.name().into(),
            at: "1".into(),
            got: m.derivative(&cubic, 1.0, None)?,
            want,
        });
    }
    let probe = perturbation_confusion_probe();
    rows.push(DemoRow {
        example: "nested d/dy (x + y)",
        how: "untagged dual".into(),
        at: "1".into(),
        got: probe.naive_inner,
        want: 2.0,
    });
    rows.push(DemoRow {
        example: "nested d/dy (x + y)",
        how: "tagged dual".into(),
        at: "1".into(),
        got: probe.tagged_inner,
        want: 1.0,
    });
    for (name, src, x, want) in [
        ("if", IF, 2.0, -4.0),
        ("if", IF, -2.0, -4.0),
        ("while", WHILE, 8.0, 0.125),
    ] {
        let prog = stage_reverse(&p(src))?;
        let got = adlc_core::staging::ir_eval(&prog, x)?;
        rows.push(DemoRow {
            example: name,
            how: "staged".into(),
            at: x.to_string(),
            got,
            want,
        });
    }
    let tree = Tree::parse("(node 3.0 (leaf) (leaf))")?;
    let got = ir_eval_tree(&stage_tree(&p(TREE_BODY))?, &tree, 2.0)?;
    rows.push(DemoRow {
        example: "tree (l*r)*v",
        how: "staged".into(),
        at: format!("2 on {tree}"),
        got,
        want: 12.0,
    });
    let t = gradient_descent(&p(DESCENT), 0.0, 0.1, 100, Mode::ReverseMetaShift)?;
    let last = t.last().expect("trajectory is never empty").x;
    let err = (last - 3.0).abs();
    rows.push(DemoRow {
        example: "descent (x-3)^2",
        how: "100 steps, rate 0.1".into(),
        at: "0".into(),
        got: last,
        want: 3.0,
    });

    let mut s = String::from("example\tmode\tat\tresult\texpected\tok\n");
    let mut all_ok = true;
    for r in &rows {
        let ok = if r.example.starts_with("descent") {
            err < 1e-3
        } else {
            r.got == r.want
        };
        all_ok &= ok;
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.example,
            r.how,
            r.at,
            r.got,
            r.want,
            if ok { "yes" } else { "NO" }
        );
    }
    let square = stage_reverse(&p("(lam x (* x x))"))?;
    let _ = write!(s, "\nsquare, optimized:\n{}", emit_c(&ir_optimize(&square)));
    if all_ok {
        Ok(s)
    } else {
        Err(Failure::Check(s))
    }
}
