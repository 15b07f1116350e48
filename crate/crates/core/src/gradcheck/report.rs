//! Cross-mode gradient comparison.

use super::corpus::{random_program, CorpusSpec};
use super::{default_step, finite_diff, relative_deviation, Mode};
use crate::error::TransformError;
use crate::lang::Expr;
use crate::Error;
use serde::Serialize;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Central-difference step; `None` picks `1e-6 * max(1, |x0|)`.
    pub h: Option<f64>,
    /// Relative tolerance against finite differences.
    pub fd_tol: f64,
    /// Relative tolerance between the forward and reverse classes.
    pub class_tol: f64,
    pub limit: Option<usize>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            h: None,
            fd_tol: 1e-4,
            class_tol: 1e-10,
            limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeResult {
    pub mode: Mode,
    pub value: Option<f64>,
    /// Set when the mode failed or does not apply to the program.
    pub error: Option<String>,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradReport {
    pub program: String,
    pub probe: f64,
    pub gradients: Vec<ModeResult>,
    pub finite_diff: Option<f64>,
    /// Largest relative deviation between any two computed gradients.
    pub max_deviation: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl GradReport {
    pub fn value(&self, m: Mode) -> Option<f64> {
        self.gradients
            .iter()
            .find(|r| r.mode == m)
            .and_then(|r| r.value)
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn not_applicable(e: &Error) -> bool {
    matches!(
        e,
        Error::Unsupported(_)
            | Error::Anf(_)
            | Error::Transform(TransformError::Unsupported(_) | TransformError::Sugar(_))
            | Error::Ir(crate::staging::IrError::Unsupported(_))
    )
}

/// False for a NaN deviation.
fn within(deviation: f64, tol: f64) -> bool {
    deviation <= tol
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{}\t{}\t{status}\tfd={}\tmaxdev={:e}",
            self.program,
            self.probe,
            opt(self.finite_diff),
            self.max_deviation
        )?;
        for r in &self.gradients {
            let v = if r.skipped {
                "n/a".to_string()
            } else {
                opt(r.value)
            };
            write!(f, "\t{}={v}", r.mode)?;
        }
        if !self.failures.is_empty() {
            write!(f, "\t{}", self.failures.join("; "))?;
        }
        Ok(())
    }
}

pub type GradFn<'a> = &'a dyn Fn(Mode, &Expr, f64) -> Result<f64, Error>;

/// Checks one program at one probe with the library's own modes.
pub fn check_program(id: &str, f: &Expr, x0: f64, cfg: &CheckConfig) -> GradReport {
    let limit = cfg.limit;
    check_program_with(id, f, x0, cfg, &|m, f, x| m.derivative(f, x, limit))
}

pub fn check_program_with(
    id: &str,
    f: &Expr,
    x0: f64,
    cfg: &CheckConfig,
    grad: GradFn<'_>,
) -> GradReport {
    let mut failures = Vec::new();
    let mut gradients = Vec::new();
    for m in Mode::FORWARD_CLASS.into_iter().chain(Mode::REVERSE_CLASS) {
        let r = match grad(m, f, x0) {
            Ok(v) => ModeResult {
                mode: m,
                value: Some(v),
                error: None,
                skipped: false,
            },
            Err(e) => {
                let skipped = not_applicable(&e);
                if !skipped {
                    failures.push(format!("{m}: {e}"));
                }
                ModeResult {
                    mode: m,
                    value: None,
                    error: Some(e.to_string()),
                    skipped,
                }
            }
        };
        gradients.push(r);
    }

    let class_values = |class: &[Mode]| -> Vec<(Mode, f64)> {
        gradients
            .iter()
            .filter(|r| class.contains(&r.mode))
            .filter_map(|r| r.value.map(|v| (r.mode, v)))
            .collect()
    };
    let fwd = class_values(&Mode::FORWARD_CLASS);
    let rev = class_values(&Mode::REVERSE_CLASS);
    for class in [&fwd, &rev] {
        if let Some(&(m0, v0)) = class.first() {
            for &(m, v) in &class[1..] {
                if v.to_bits() != v0.to_bits() {
                    failures.push(format!("{m}={v} differs bitwise from {m0}={v0}"));
                }
            }
        }
    }
    if let (Some(&(mf, vf)), Some(&(mr, vr))) = (fwd.first(), rev.first()) {
        if !within(relative_deviation(vf, vr), cfg.class_tol) {
            failures.push(format!(
                "{mf}={vf} and {mr}={vr} differ beyond {}",
                cfg.class_tol
            ));
        }
    }

    let h = cfg.h.unwrap_or_else(|| default_step(x0));
    let fd = match finite_diff(f, x0, h) {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(format!("finite difference: {e}"));
            None
        }
    };
    let reference = fwd.first().or(rev.first()).map(|&(_, v)| v);
    match (fd, reference) {
        (Some(d), Some(g)) if !within(relative_deviation(d, g), cfg.fd_tol) => {
            failures.push(format!(
                "finite difference {d} differs from {g} beyond {}",
                cfg.fd_tol
            ));
        }
        (_, None) => failures.push("no mode produced a gradient".into()),
        _ => {}
    }

    let all: Vec<f64> = fwd.iter().chain(&rev).map(|&(_, v)| v).collect();
    let mut max_deviation: f64 = 0.0;
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            max_deviation = max_deviation.max(relative_deviation(*a, *b));
        }
    }

    GradReport {
        program: id.to_string(),
        probe: x0,
        gradients,
        finite_diff: fd,
        max_deviation,
        pass: failures.is_empty(),
        failures,
    }
}

/// Every corpus program at every probe.
pub fn crosscheck(spec: &CorpusSpec, probes: &[f64], cfg: &CheckConfig) -> Vec<GradReport> {
    let limit = cfg.limit;
    crosscheck_with(spec, probes, cfg, &|m, f, x| m.derivative(f, x, limit))
}

/// [`crosscheck`] with a caller-supplied gradient function, for exercising
/// the comparison itself.
pub fn crosscheck_with(
    spec: &CorpusSpec,
    probes: &[f64],
    cfg: &CheckConfig,
    grad: GradFn<'_>,
) -> Vec<GradReport> {
    let mut out = Vec::with_capacity(spec.count * probes.len());
    for i in 0..spec.count {
        let f = random_program(spec, i);
        let id = format!("seed{}/{i}", spec.seed);
        for &x in probes {
            out.push(check_program_with(&id, &f, x, cfg, grad));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::corpus::DEFAULT_PROBES;
    use crate::lang::parse;

    #[test]
    fn small_corpus_passes() {
        let spec = CorpusSpec {
            count: 20,
            ..CorpusSpec::default()
        };
        for r in crosscheck(&spec, &DEFAULT_PROBES, &CheckConfig::default()) {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn constant_programs_have_zero_gradients() {
        let spec = CorpusSpec {
            count: 10,
            weights: [1, 0, 1],
            ..CorpusSpec::default()
        };
        for r in crosscheck(&spec, &[0.5, 3.0], &CheckConfig::default()) {
            assert!(r.pass, "{r}");
            assert!(r.gradients.iter().all(|g| g.value == Some(0.0)), "{r}");
        }
    }

    #[test]
    fn corrupted_mode_is_reported() {
        let spec = CorpusSpec {
            count: 3,
            ..CorpusSpec::default()
        };
        let bad = |m: Mode, f: &Expr, x: f64| {
            let v = m.derivative(f, x, None)?;
            Ok(if m == Mode::Tape { v + 1.0 } else { v })
        };
        let reports = crosscheck_with(&spec, &[1.0], &CheckConfig::default(), &bad);
        assert!(reports.iter().all(|r| !r.pass));
        assert!(reports[0].failures.iter().any(|f| f.starts_with("tape=")));
    }

    #[test]
    fn control_flow_skips_runtime_modes() {
        let f = parse("(lam x (if (> x 0.0) (* x x) x))").unwrap();
        let r = check_program("abs", &f, 2.0, &CheckConfig::default());
        assert!(r.pass, "{r}");
        assert_eq!(r.value(Mode::Staged), Some(4.0));
        assert!(r.gradients.iter().any(|g| g.skipped));
    }
}
