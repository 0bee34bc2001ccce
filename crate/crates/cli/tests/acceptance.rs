//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::time::{Duration, Instant};

use fracdelay::laplace::{decay_check, impulse_response, invert_laplace, Decay, InversionOptions};
use fracdelay::rational::{count_rhp, IntPoly};
use fracdelay::{
    bind_and_normalize, count_unstable, differentiate, parse, CharFn, IntegrationOptions,
    ParamBinding, Verdict,
};
use fracdelay_cli::{bisect, check, CheckReport};
use num_complex::Complex64;
use rand::Rng;

const EX1: &str = "s^(5*pi/6) + s^(pi/2) + s^(pi/3) + 1";
const EX2: &str = "s + K*(s^0.5+1)*exp(-s^0.5)";
const EX3: &str = "s^1.5 - 1.5*s + 4*s^0.5 + 8 - 1.5*s*exp(-tau*s)";
const EX4: &str = "s^(5/6) + (s^(1/2) + s^(1/3))*exp(-0.5*s) + exp(-s)";

type Check = fn() -> (bool, String);
type KnownPair = (&'static str, fn(Complex64) -> Complex64, fn(f64) -> f64);

struct Criterion {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn binding(pairs: &[(&str, f64)]) -> ParamBinding {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn charfn(expr: &str, pairs: &[(&str, f64)]) -> CharFn {
    bind_and_normalize(&parse(expr).unwrap(), &binding(pairs)).unwrap()
}

fn opts(omega_max: f64) -> IntegrationOptions {
    IntegrationOptions {
        omega_max,
        ..Default::default()
    }
}

fn timed_check(expr: &str, pairs: &[(&str, f64)], omega_max: f64) -> (CheckReport, Duration) {
    let start = Instant::now();
    let r = check(expr, &binding(pairs), &opts(omega_max)).unwrap();
    (r, start.elapsed())
}

fn summary(r: &CheckReport, t: Duration) -> String {
    format!("m_raw={:.6e} verdict={} ({:.2?})", r.m_raw, r.verdict, t)
}

fn example1() -> (bool, String) {
    let (r, t) = timed_check(EX1, &[], 1000.0);
    let ok = r.m_raw.abs() <= 5e-3 && r.verdict == Verdict::Stable && t < Duration::from_secs(5);
    (ok, summary(&r, t))
}

fn example1_roots() -> (bool, String) {
    let cf = charfn(EX1, &[]);
    let mut worst = 0.0f64;
    for angle in [2.0, -2.0, 3.0, -3.0] {
        let v = cf.evaluate(Complex64::from_polar(1.0, angle)).unwrap();
        worst = worst.max(v.norm());
    }
    (
        worst < 1e-10,
        format!("max |Δ(e^(±2i)), Δ(e^(±3i))| = {worst:.3e}"),
    )
}

fn example2() -> (bool, String) {
    let (a, ta) = timed_check(EX2, &[("K", 21.0)], 500.0);
    let (b, tb) = timed_check(EX2, &[("K", 22.0)], 500.0);
    let limit = Duration::from_secs(10);
    let ok = a.m_raw.abs() <= 1e-2
        && a.verdict == Verdict::Stable
        && (b.m_raw - 2.0).abs() <= 5e-2
        && b.verdict == Verdict::Unstable(2)
        && ta < limit
        && tb < limit;
    (
        ok,
        format!("K=21: {}; K=22: {}", summary(&a, ta), summary(&b, tb)),
    )
}

fn example2_boundary() -> (bool, String) {
    let r = bisect(
        EX2,
        "K",
        20.0,
        23.0,
        0.01,
        &ParamBinding::new(),
        &opts(500.0),
    )
    .unwrap();
    let ok = (r.critical - 21.51).abs() <= 0.02;
    (
        ok,
        format!(
            "critical K = {:.5} ({} -> {})",
            r.critical, r.lo_verdict, r.hi_verdict
        ),
    )
}

fn example3() -> (bool, String) {
    let (a, ta) = timed_check(EX3, &[("tau", 1.0)], 500.0);
    let (b, tb) = timed_check(EX3, &[("tau", 0.99)], 500.0);
    let r = bisect(
        EX3,
        "tau",
        0.9,
        1.2,
        0.001,
        &ParamBinding::new(),
        &opts(500.0),
    )
    .unwrap();
    let ok = a.m_raw.abs() <= 2e-2
        && a.verdict == Verdict::Stable
        && (b.m_raw - 2.0).abs() <= 2e-2
        && b.verdict == Verdict::Unstable(2)
        && (r.critical - 0.99830).abs() <= 0.002;
    (
        ok,
        format!(
            "tau=1: {}; tau=0.99: {}; critical tau = {:.5}",
            summary(&a, ta),
            summary(&b, tb),
            r.critical
        ),
    )
}

fn example4() -> (bool, String) {
    let (r, t) = timed_check(EX4, &[], 100.0);
    let ok = r.m_raw.abs() <= 5e-2 && r.verdict == Verdict::Stable && t < Duration::from_secs(5);
    (ok, summary(&r, t))
}

fn oracle_equivalence() -> (bool, String) {
    let mut rng = support::rng(7);
    let (mut agree, mut worst_residual) = (0, 0.0f64);
    for _ in 0..100 {
        let degree = rng.random_range(1..=6);
        let roots = support::random_roots(&mut rng, degree);
        let coeffs = support::expand_roots(&roots);
        let oracle = count_rhp(&IntPoly::new(coeffs.clone()).unwrap(), 0.0).unwrap();
        let r = count_unstable(
            &support::polynomial_charfn(&coeffs),
            &IntegrationOptions::default(),
        )
        .unwrap();
        worst_residual = worst_residual.max(r.residual);
        if r.m_rounded as usize == oracle && r.residual < 0.05 {
            agree += 1;
        }
    }
    (
        agree == 100,
        format!("{agree}/100 agree, max residual {worst_residual:.3e}"),
    )
}

fn derivative_order() -> (bool, String) {
    const STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
    let mut rng = support::rng(8);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let cf = support::random_charfn(&mut rng);
        let d = differentiate(&cf);
        let points: Vec<Complex64> = (0..50)
            .map(|_| support::random_point(&mut rng, (0.1, 10.0), 10.0))
            .collect();
        let errors: Vec<f64> = STEPS
            .iter()
            .map(|&h| {
                points
                    .iter()
                    .map(|&s| {
                        let exact = d.evaluate(s).unwrap();
                        (support::central_difference(&cf, s, h) - exact).norm() / exact.norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        worst = worst.min(support::observed_order(&STEPS, &errors));
    }
    (worst >= 1.9, format!("minimum observed order {worst:.4}"))
}

fn invariants() -> (bool, String) {
    let mut rng = support::rng(9);
    let (mut conj_worst, mut scale_worst) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let cf = support::random_charfn_with(&mut rng, 1.0);
        for _ in 0..20 {
            let s = support::random_point(&mut rng, (0.0, 20.0), 50.0);
            let v = cf.evaluate(s).unwrap();
            let vc = cf.evaluate(s.conj()).unwrap();
            conj_worst = conj_worst.max((vc - v.conj()).norm() / v.norm());
        }
        let c = rng.random_range(1e-3..1e3) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let o = IntegrationOptions::default();
        let a = count_unstable(&cf, &o).unwrap();
        let b = count_unstable(&cf.scaled(c).unwrap(), &o).unwrap();
        let diff = (a.m_raw - b.m_raw).abs();
        scale_worst = scale_worst.max(if diff.is_nan() { f64::INFINITY } else { diff });
    }
    (
        conj_worst < 1e-13 && scale_worst < 1e-10,
        format!("conjugate rel. err {conj_worst:.2e}, scaling Δm {scale_worst:.2e}"),
    )
}

struct CrossCase {
    label: &'static str,
    expr: &'static str,
    params: &'static [(&'static str, f64)],
    omega_max: f64,
    t_max: f64,
    series_len: usize,
}

const CROSS_CASES: [CrossCase; 6] = [
    CrossCase {
        label: "Ex.1",
        expr: EX1,
        params: &[],
        omega_max: 1000.0,
        t_max: 50.0,
        series_len: 100,
    },
    CrossCase {
        label: "Ex.2 K=21",
        expr: EX2,
        params: &[("K", 21.0)],
        omega_max: 500.0,
        t_max: 50.0,
        series_len: 400,
    },
    CrossCase {
        label: "Ex.2 K=22",
        expr: EX2,
        params: &[("K", 22.0)],
        omega_max: 500.0,
        t_max: 50.0,
        series_len: 400,
    },
    CrossCase {
        label: "Ex.3 tau=1",
        expr: EX3,
        params: &[("tau", 1.0)],
        omega_max: 500.0,
        t_max: 5000.0,
        series_len: 20000,
    },
    CrossCase {
        label: "Ex.3 tau=0.99",
        expr: EX3,
        params: &[("tau", 0.99)],
        omega_max: 500.0,
        t_max: 1000.0,
        series_len: 4000,
    },
    CrossCase {
        label: "Ex.4",
        expr: EX4,
        params: &[],
        omega_max: 100.0,
        t_max: 50.0,
        series_len: 400,
    },
];

fn laplace() -> (bool, String) {
    let o = InversionOptions::default();
    let pairs: [KnownPair; 3] = [
        ("e^-t", |s| (s + 1.0).inv(), |t| (-t).exp()),
        ("step", |s| s.inv(), |_| 1.0),
        ("ramp", |s| (s * s).inv(), |t| t),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f, exact) in pairs {
        let worst = (0..=95)
            .map(|k| {
                let t = 0.5 + 0.1 * k as f64;
                (invert_laplace(|s| Ok(f(s)), t, &o).unwrap() - exact(t)).abs()
            })
            .fold(0.0, f64::max);
        ok &= worst < 1e-3;
        parts.push(format!("{name} {worst:.1e}"));
    }
    println!(
        "    {:<14} {:>10} {:>14} {:>13}",
        "case", "m_raw", "verdict", "decay"
    );
    for case in &CROSS_CASES {
        let cf = charfn(case.expr, case.params);
        let r = count_unstable(&cf, &opts(case.omega_max)).unwrap();
        let inv = InversionOptions {
            series_len: case.series_len,
            ..InversionOptions::default()
        };
        let trace = impulse_response(&cf, case.t_max, 400, &inv).unwrap();
        let decay = decay_check(&trace).unwrap_or(Decay::Inconclusive);
        let agree = matches!(
            (r.verdict, decay),
            (Verdict::Stable, Decay::Decaying) | (Verdict::Unstable(_), Decay::Growing)
        );
        ok &= agree;
        println!(
            "    {:<14} {:>10.4} {:>14} {:>13} {} (t_max={}, series_len={})",
            case.label,
            r.m_raw,
            r.verdict.to_string(),
            decay.to_string(),
            if agree { "agree" } else { "DISAGREE" },
            case.t_max,
            case.series_len
        );
    }
    (ok, format!("known pairs max abs err: {}", parts.join(", ")))
}

fn main() {
    let table: [(u32, &str, Check); 10] = [
        (1, "example 1 regression", example1),
        (2, "example 1 analytic roots", example1_roots),
        (3, "example 2 regression", example2),
        (4, "example 2 boundary", example2_boundary),
        (5, "example 3 regression and boundary", example3),
        (6, "example 4 regression", example4),
        (7, "oracle equivalence", oracle_equivalence),
        (8, "derivative correctness", derivative_order),
        (9, "conjugate symmetry and scaling invariance", invariants),
        (10, "inverse Laplace pairs and cross-validation", laplace),
    ];
    let mut results = Vec::new();
    for (id, name, f) in table {
        let (passed, detail) = f();
        println!(
            "[{}] criterion {id:>2}: {name}: {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        results.push(Criterion {
            id,
            name,
            passed,
            detail,
        });
    }
    let failed: Vec<&Criterion> = results.iter().filter(|c| !c.passed).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        for c in failed {
            eprintln!("failed criterion {}: {} ({})", c.id, c.name, c.detail);
        }
        std::process::exit(1);
    }
}
