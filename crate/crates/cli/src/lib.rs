//! Library side of the `fracdelay` command-line tool.
//!
//! Every command returns its rendered output plus an exit code so the binary
//! stays a thin shell and tests can call the commands in-process.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand};
use fracdelay::laplace::{decay_check, impulse_response, Decay, InversionOptions, LaplaceError};
use fracdelay::{
    bind_and_normalize, count_unstable, integrand, parse, CharFn, ExprError, IntegrationOptions,
    ParamBinding, RoucheError, StabilityReport, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_STABLE: i32 = 0;
pub const EXIT_UNSTABLE: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Options(#[from] RoucheError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error("{0}")]
    Usage(String),
    #[error("parameter `{0}` is bound but does not appear in the expression")]
    UnusedParameter(String),
    #[error("verdict is {verdict} at both ends of [{lo}, {hi}]")]
    SameVerdictAtEnds { lo: f64, hi: f64, verdict: Verdict },
    #[error("verdict is Indeterminate at {at}; pick a bracket with determinate ends")]
    IndeterminateAtEnds { at: f64 },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            _ => EXIT_INPUT,
        }
    }
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Stable => EXIT_STABLE,
        Verdict::Unstable(_) => EXIT_UNSTABLE,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracdelay",
    version,
    about = "Stability of fractional-order systems with delays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count unstable roots of a characteristic function.
    Check {
        expression: String,
        #[command(flatten)]
        common: Common,
    },
    /// Dump the integrand Re{Δ'(iω)/Δ(iω)} as CSV.
    Integrand {
        expression: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Linear instead of logarithmic spacing.
        #[arg(long)]
        linear: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Impulse response of 1/Δ(s) by numerical Laplace inversion.
    Impulse {
        expression: String,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 6.0)]
        shift: f64,
        #[arg(long, default_value_t = 20)]
        series_len: usize,
        #[arg(long, default_value_t = 19)]
        euler_depth: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the root count over an evenly spaced parameter grid.
    Sweep {
        expression: String,
        /// Parameter to vary.
        #[arg(long)]
        vary: String,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Locate the parameter value where the verdict changes.
    Bisect {
        expression: String,
        #[arg(long)]
        vary: String,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Bind a parameter, e.g. `--param K=21`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_doublings: Option<u32>,
    /// Emit JSON instead of text or CSV.
    #[arg(long)]
    pub json: bool,
    /// Write output to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub output: Option<std::path::PathBuf>,
}

impl Common {
    pub fn options(&self) -> IntegrationOptions {
        let d = IntegrationOptions::default();
        IntegrationOptions {
            eps: self.eps.unwrap_or(d.eps),
            omega_max: self.omega_max.unwrap_or(d.omega_max),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            max_doublings: self.max_doublings.unwrap_or(d.max_doublings),
            ..d
        }
    }

    pub fn binding(&self) -> ParamBinding {
        self.params.iter().cloned().collect()
    }
}

pub fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{text}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err("empty parameter name".into());
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", value.trim()))?;
    if !value.is_finite() {
        return Err(format!("parameter {name} must be finite"));
    }
    Ok((name.to_string(), value))
}

/// Result of a command: rendered output and process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome { output, code: 0 }
    }
}

/// Parses and binds, rejecting bindings the expression never uses.
pub fn build(expression: &str, binding: &ParamBinding) -> Result<CharFn, CliError> {
    let parsed = parse(expression)?;
    if let Some(unused) = binding.keys().find(|k| !parsed.params.contains(*k)) {
        return Err(CliError::UnusedParameter(unused.clone()));
    }
    Ok(bind_and_normalize(&parsed, binding)?)
}

/// JSON form of a `check` run.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub expression: String,
    pub params: BTreeMap<String, f64>,
    pub alpha_n: f64,
    pub m_raw: f64,
    pub m_rounded: u32,
    pub residual: f64,
    pub verdict: Verdict,
    pub integral_value: f64,
    pub integral_error_estimate: f64,
    pub omega_used: f64,
    pub doublings: u32,
    pub warnings: Vec<String>,
}

impl CheckReport {
    fn new(expression: &str, params: ParamBinding, r: StabilityReport) -> Self {
        CheckReport {
            expression: expression.to_string(),
            params,
            alpha_n: r.alpha_n,
            m_raw: r.m_raw,
            m_rounded: r.m_rounded,
            residual: r.residual,
            verdict: r.verdict,
            integral_value: r.integral_value,
            integral_error_estimate: r.integral_error_estimate,
            omega_used: r.omega_used,
            doublings: r.doublings,
            warnings: r.warnings,
        }
    }
}

pub fn check(
    expression: &str,
    binding: &ParamBinding,
    opts: &IntegrationOptions,
) -> Result<CheckReport, CliError> {
    let cf = build(expression, binding)?;
    let report = count_unstable(&cf, opts)?;
    Ok(CheckReport::new(expression, binding.clone(), report))
}

fn render_check(report: &CheckReport, cf_text: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "expression: {cf_text}");
    for (k, v) in &report.params {
        let _ = writeln!(out, "  {k} = {v}");
    }
    let _ = writeln!(out, "alpha_n:    {}", report.alpha_n);
    let _ = writeln!(
        out,
        "M:          {} (residual {:.3e})",
        report.m_raw, report.residual
    );
    let _ = writeln!(
        out,
        "integral:   {} ± {:.1e} up to omega = {} ({} doublings)",
        report.integral_value, report.integral_error_estimate, report.omega_used, report.doublings
    );
    let _ = writeln!(out, "verdict:    {}", report.verdict);
    for w in &report.warnings {
        let _ = writeln!(out, "warning:    {w}");
    }
    out
}

/// Sample abscissae, logarithmic unless `linear`.
pub fn grid(from: f64, to: f64, points: usize, linear: bool) -> Result<Vec<f64>, CliError> {
    if !(from.is_finite() && to.is_finite() && from > 0.0) {
        return Err(CliError::Usage("need 0 < from and finite bounds".into()));
    }
    match points {
        0 => Err(CliError::Usage("need at least one point".into())),
        1 if from == to => Ok(vec![from]),
        1 => Err(CliError::Usage("a single point needs from == to".into())),
        _ if from >= to => Err(CliError::Usage("need from < to".into())),
        n => {
            let last = (n - 1) as f64;
            let mut xs: Vec<f64> = (0..n)
                .map(|k| {
                    let u = k as f64 / last;
                    if linear {
                        from + (to - from) * u
                    } else {
                        from * (to / from).powf(u)
                    }
                })
                .collect();
            xs[n - 1] = to;
            Ok(xs)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Sample {
    omega: f64,
    value: Option<f64>,
}

pub fn integrand_table(cf: &CharFn, omegas: &[f64]) -> Vec<(f64, Option<f64>)> {
    let dcf = fracdelay::differentiate(cf);
    omegas
        .iter()
        .map(|&w| {
            let v = integrand(cf, &dcf, w).ok().filter(|v| v.is_finite());
            (w, v)
        })
        .collect()
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
struct ImpulseJson {
    samples: Vec<ImpulseSample>,
    decay: String,
}

#[derive(Debug, Clone, Serialize)]
struct ImpulseSample {
    t: f64,
    h: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub m_raw: f64,
    pub m_rounded: u32,
    pub verdict: Verdict,
}

/// Binds `vary = value` on top of `binding` after checking the name is free.
fn vary_binding(
    expression: &str,
    vary: &str,
    binding: &ParamBinding,
) -> Result<(fracdelay::ParsedExpr, ParamBinding), CliError> {
    let parsed = parse(expression)?;
    if !parsed.params.contains(vary) {
        return Err(CliError::UnusedParameter(vary.to_string()));
    }
    if binding.contains_key(vary) {
        return Err(CliError::Usage(format!(
            "`{vary}` is both varied and bound with --param"
        )));
    }
    if let Some(unused) = binding.keys().find(|k| !parsed.params.contains(*k)) {
        return Err(CliError::UnusedParameter(unused.clone()));
    }
    Ok((parsed, binding.clone()))
}

fn run_at(
    parsed: &fracdelay::ParsedExpr,
    binding: &ParamBinding,
    vary: &str,
    value: f64,
    opts: &IntegrationOptions,
) -> Result<StabilityReport, CliError> {
    let mut b = binding.clone();
    b.insert(vary.to_string(), value);
    let cf = bind_and_normalize(parsed, &b)?;
    Ok(count_unstable(&cf, opts)?)
}

pub fn sweep(
    expression: &str,
    vary: &str,
    lo: f64,
    hi: f64,
    steps: usize,
    binding: &ParamBinding,
    opts: &IntegrationOptions,
) -> Result<Vec<SweepRow>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::Usage("need finite lo < hi".into()));
    }
    if steps < 2 {
        return Err(CliError::Usage("need at least 2 steps".into()));
    }
    opts.validate()?;
    let (parsed, binding) = vary_binding(expression, vary, binding)?;
    let values: Vec<f64> = (0..steps)
        .map(|k| {
            if k == steps - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (steps - 1) as f64
            }
        })
        .collect();
    values
        .par_iter()
        .map(|&v| {
            let r = run_at(&parsed, &binding, vary, v, opts)?;
            Ok(SweepRow {
                value: v,
                m_raw: r.m_raw,
                m_rounded: r.m_rounded,
                verdict: r.verdict,
            })
        })
        .collect()
}

/// One evaluation made during bisection.
#[derive(Debug, Clone, Serialize)]
pub struct BisectStep {
    pub lo: f64,
    pub hi: f64,
    pub probe: f64,
    pub m_raw: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BisectResult {
    pub param: String,
    pub critical: f64,
    pub lo_verdict: Verdict,
    pub hi_verdict: Verdict,
    pub iterations: Vec<BisectStep>,
}

const MAX_BISECT_STEPS: usize = 200;

/// Brackets the change of verdict between `lo` and `hi` down to width `tol`.
///
/// A probe counts as the low side when its verdict equals the verdict at
/// `lo`, and as the high side for any other determinate verdict. When the
/// midpoint is Indeterminate the quarter points are probed instead and the
/// bracket shrinks toward whichever of them is determinate.
pub fn bisect(
    expression: &str,
    vary: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    binding: &ParamBinding,
    opts: &IntegrationOptions,
) -> Result<BisectResult, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::Usage("need finite lo < hi".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Usage("tol must be positive".into()));
    }
    opts.validate()?;
    let (parsed, binding) = vary_binding(expression, vary, binding)?;
    let eval = |x: f64| run_at(&parsed, &binding, vary, x, opts);

    let (r_lo, r_hi) = rayon::join(|| eval(lo), || eval(hi));
    let (r_lo, r_hi) = (r_lo?, r_hi?);
    for (at, r) in [(lo, &r_lo), (hi, &r_hi)] {
        if r.verdict == Verdict::Indeterminate {
            return Err(CliError::IndeterminateAtEnds { at });
        }
    }
    if r_lo.verdict == r_hi.verdict {
        return Err(CliError::SameVerdictAtEnds {
            lo,
            hi,
            verdict: r_lo.verdict,
        });
    }
    let low_side = r_lo.verdict;

    let (mut a, mut b) = (lo, hi);
    let mut log = Vec::new();
    while b - a > tol && log.len() < MAX_BISECT_STEPS {
        let mid = 0.5 * (a + b);
        let r = eval(mid)?;
        log.push(BisectStep {
            lo: a,
            hi: b,
            probe: mid,
            m_raw: r.m_raw,
            verdict: r.verdict,
            note: None,
        });
        match r.verdict {
            v if v == low_side => a = mid,
            Verdict::Indeterminate => {
                let q1 = a + 0.25 * (b - a);
                let q3 = a + 0.75 * (b - a);
                let (p1, p3) = rayon::join(|| eval(q1), || eval(q3));
                let (p1, p3) = (p1?, p3?);
                let (a0, b0) = (a, b);
                for (q, p) in [(q1, &p1), (q3, &p3)] {
                    let note = match p.verdict {
                        Verdict::Indeterminate => "quarter probe indeterminate",
                        v if v == low_side => {
                            a = a.max(q);
                            "quarter probe on the low side"
                        }
                        _ => {
                            b = b.min(q);
                            "quarter probe on the high side"
                        }
                    };
                    log.push(BisectStep {
                        lo: a0,
                        hi: b0,
                        probe: q,
                        m_raw: p.m_raw,
                        verdict: p.verdict,
                        note: Some(note.to_string()),
                    });
                }
                if a >= b {
                    // inconsistent probes: the verdict is not monotone here
                    a = a0;
                    b = b0;
                }
                if (a, b) == (a0, b0) {
                    let step = log.last_mut().expect("probes were logged");
                    step.note = Some(format!(
                        "no determinate probe; stopped with bracket [{a}, {b}]"
                    ));
                    break;
                }
            }
            _ => b = mid,
        }
    }
    Ok(BisectResult {
        param: vary.to_string(),
        critical: 0.5 * (a + b),
        lo_verdict: r_lo.verdict,
        hi_verdict: r_hi.verdict,
        iterations: log,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Check { expression, common } => {
            let binding = common.binding();
            let cf = build(expression, &binding)?;
            let report = count_unstable(&cf, &common.options())?;
            let report = CheckReport::new(expression, binding, report);
            let code = exit_code(report.verdict);
            let output = if common.json {
                to_json(&report)
            } else {
                render_check(&report, &cf.to_string())
            };
            Ok(Outcome { output, code })
        }
        Command::Integrand {
            expression,
            from,
            to,
            points,
            linear,
            common,
        } => {
            let cf = build(expression, &common.binding())?;
            let omegas = grid(*from, *to, *points, *linear)?;
            let rows = integrand_table(&cf, &omegas);
            if common.json {
                let samples: Vec<Sample> = rows
                    .into_iter()
                    .map(|(omega, value)| Sample { omega, value })
                    .collect();
                return Ok(Outcome::ok(to_json(&samples)));
            }
            let mut out = String::from("omega,value\n");
            for (w, v) in rows {
                let _ = writeln!(out, "{w},{}", csv_field(v));
            }
            Ok(Outcome::ok(out))
        }
        Command::Impulse {
            expression,
            t_max,
            points,
            shift,
            series_len,
            euler_depth,
            common,
        } => {
            let cf = build(expression, &common.binding())?;
            let opts = InversionOptions {
                shift: *shift,
                series_len: *series_len,
                euler_depth: *euler_depth,
            };
            let trace = impulse_response(&cf, *t_max, *points, &opts)?;
            let decay = decay_check(&trace).unwrap_or(Decay::Inconclusive);
            if common.json {
                let samples = trace
                    .times
                    .iter()
                    .zip(&trace.values)
                    .map(|(&t, &h)| ImpulseSample { t, h })
                    .collect();
                return Ok(Outcome::ok(to_json(&ImpulseJson {
                    samples,
                    decay: decay.to_string(),
                })));
            }
            let mut out = String::from("t,h\n");
            for (t, h) in trace.times.iter().zip(&trace.values) {
                let _ = writeln!(out, "{t},{}", csv_field(*h));
            }
            let _ = writeln!(out, "# decay: {decay}");
            Ok(Outcome::ok(out))
        }
        Command::Sweep {
            expression,
            vary,
            lo,
            hi,
            steps,
            common,
        } => {
            let rows = sweep(
                expression,
                vary,
                *lo,
                *hi,
                *steps,
                &common.binding(),
                &common.options(),
            )?;
            if common.json {
                return Ok(Outcome::ok(to_json(&rows)));
            }
            let mut out = String::from("value,m_raw,m_rounded,verdict\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{},{}", r.value, r.m_raw, r.m_rounded, r.verdict);
            }
            Ok(Outcome::ok(out))
        }
        Command::Bisect {
            expression,
            vary,
            lo,
            hi,
            tol,
            common,
        } => {
            let result = bisect(
                expression,
                vary,
                *lo,
                *hi,
                *tol,
                &common.binding(),
                &common.options(),
            )?;
            Ok(Outcome::ok(to_json(&result)))
        }
    }
}

/// `--output` target of the command, if any.
pub fn output_path(cli: &Cli) -> Option<&std::path::Path> {
    let common = match &cli.command {
        Command::Check { common, .. }
        | Command::Integrand { common, .. }
        | Command::Impulse { common, .. }
        | Command::Sweep { common, .. }
        | Command::Bisect { common, .. } => common,
    };
    common.output.as_deref()
}
