//! Unstable-root counting by the argument principle on the right half-plane.
//!
//! Along the contour made of the imaginary axis, a vanishing indentation
//! around the branch point and a large right half-circle, the number of zeros
//! of Δ on the first sheet with `Re s > 0` is
//!
//! ```text
//! M = α_n/2 − (1/π)·∫_ε^∞ Re{Δ′(iω)/Δ(iω)} dω
//! ```
//!
//! The large arc contributes `α_n/2` and the indentation nothing, provided
//! `Δ(0) ≠ 0`. The improper integral is truncated at `Ω`, which is doubled
//! until `M` settles.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::calculus::{differentiate, CalcError, DerivedFn, DEFAULT_ROOT_FLOOR};
use crate::expr::CharFn;
use crate::quadrature::{integrate_partitioned, QuadConfig, QuadError};

/// Quadrature samples with `|Δ|` below this fraction of the surrounding
/// magnitude count as a root on the contour.
const PROXIMITY_RATIO: f64 = 1e-6;
/// Dips deeper than this get extra breakpoints so a sharp peak of the
/// integrand cannot slip between quadrature nodes.
const DIP_RATIO: f64 = 1e-2;
const PANELS_PER_DECADE: f64 = 8.0;
const PANELS_PER_DOUBLING: usize = 16;
const MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOptions {
    /// Lower integration bound ε.
    pub eps: f64,
    /// Initial upper bound Ω.
    pub omega_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// How many times Ω may be doubled while waiting for M to settle. Zero
    /// integrates over `[eps, omega_max]` only.
    pub max_doublings: u32,
    /// Largest accepted distance between M and the nearest integer.
    pub residual_warn: f64,
    /// `|Δ|` threshold near the origin below which Δ(0) is taken as zero.
    pub origin_floor: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            eps: 1e-9,
            omega_max: 1e3,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_doublings: 6,
            residual_warn: 0.05,
            origin_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoucheError {
    #[error("invalid integration options: {0}")]
    InvalidOptions(String),
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<(), RoucheError> {
        let bad = |m: &str| Err(RoucheError::InvalidOptions(m.to_string()));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.omega_max.is_finite() && self.eps < self.omega_max) {
            return bad("eps must be below omega_max");
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.residual_warn > 0.0 && self.origin_floor >= 0.0) {
            return bad("residual_warn must be positive and origin_floor non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Stable,
    Unstable(u32),
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Stable => f.write_str("Stable"),
            Verdict::Unstable(n) => write!(f, "Unstable({n})"),
            Verdict::Indeterminate => f.write_str("Indeterminate"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
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
    /// `|M(2Ω) − M(Ω)|` for every doubling performed.
    #[serde(skip)]
    pub tail_deltas: Vec<f64>,
}

/// `Re{Δ′(iω)/Δ(iω)}`.
pub fn integrand(cf: &CharFn, dcf: &DerivedFn, omega: f64) -> Result<f64, CalcError> {
    let s = Complex64::new(0.0, omega);
    Ok(crate::calculus::log_derivative(cf, dcf, s)?.re)
}

/// Evaluates the integrand while keeping every `(ω, |Δ(iω)|)` pair.
struct Sampler<'a> {
    cf: &'a CharFn,
    dcf: &'a DerivedFn,
    samples: Vec<(f64, f64)>,
    root_hits: usize,
    failures: Vec<String>,
}

impl<'a> Sampler<'a> {
    fn new(cf: &'a CharFn, dcf: &'a DerivedFn) -> Self {
        Sampler {
            cf,
            dcf,
            samples: Vec::new(),
            root_hits: 0,
            failures: Vec::new(),
        }
    }

    fn magnitude(&self, omega: f64) -> f64 {
        self.cf
            .evaluate(Complex64::new(0.0, omega))
            .map(|v| v.norm())
            .unwrap_or(f64::NAN)
    }

    fn value(&mut self, omega: f64) -> f64 {
        let s = Complex64::new(0.0, omega);
        let delta = match self.cf.evaluate(s) {
            Ok(v) => v,
            Err(e) => {
                self.failures.push(e.to_string());
                return 0.0;
            }
        };
        let magnitude = delta.norm();
        self.samples.push((omega, magnitude));
        if magnitude < DEFAULT_ROOT_FLOOR {
            self.root_hits += 1;
            return 0.0;
        }
        match self.dcf.evaluate(s) {
            Ok(d) => (d / delta).re,
            Err(e) => {
                self.failures.push(e.to_string());
                0.0
            }
        }
    }
}

/// A local minimum of `|Δ(iω)|` after refinement.
#[derive(Debug, Clone, Copy)]
struct Dip {
    omega: f64,
    depth: f64,
    /// Estimated distance of the nearby root from the imaginary axis.
    width: f64,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Refines sampled local minima of `|Δ(iω)|`.
fn find_dips(sampler: &Sampler<'_>) -> Vec<Dip> {
    let mut pts = sampler.samples.clone();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut dips = Vec::new();
    for k in 1..pts.len().saturating_sub(1) {
        let (lo, mid, hi) = (pts[k - 1], pts[k], pts[k + 1]);
        let scale = lo.1.max(hi.1);
        if !(mid.1 < lo.1 && mid.1 <= hi.1 && mid.1 < (1.0 - 1e-6) * scale) {
            continue;
        }
        let (omega, depth) = match golden_min(|w| sampler.magnitude(w), lo.0, hi.0) {
            (w, d) if d <= mid.1 => (w, d),
            _ => mid,
        };
        if depth < DIP_RATIO * scale {
            let slope = sampler
                .dcf
                .evaluate(Complex64::new(0.0, omega))
                .map(|d| d.norm())
                .unwrap_or(0.0);
            let width = if slope > 0.0 { depth / slope } else { 0.0 };
            dips.push(Dip {
                omega,
                depth: depth / scale,
                width,
            });
        }
    }
    dips
}

struct Segment {
    value: f64,
    error: f64,
    warnings: Vec<String>,
    /// A root sits on (or numerically on) the imaginary axis.
    on_contour: bool,
    /// The quadrature itself failed.
    failed: bool,
}

fn integrate_segment(cf: &CharFn, dcf: &DerivedFn, points: &[f64], cfg: &QuadConfig) -> Segment {
    let (a, b) = (points[0], points[points.len() - 1]);
    let mut sampler = Sampler::new(cf, dcf);
    let first = integrate_partitioned(|w| sampler.value(w), points, cfg);
    let dips = find_dips(&sampler);
    let mut on_contour = sampler.root_hits > 0;
    let mut warnings = Vec::new();
    for d in &dips {
        if d.depth < PROXIMITY_RATIO {
            on_contour = true;
            warnings.push(format!(
                "root on or near the imaginary axis at ω ≈ {:.9} (|Δ| dips to {:.1e} of its local scale)",
                d.omega, d.depth
            ));
        }
    }
    if sampler.root_hits > 0 {
        warnings.push(format!(
            "Δ(iω) vanished at {} quadrature samples in [{a}, {b}]",
            sampler.root_hits
        ));
    }

    // a sharp peak of the integrand may have been stepped over; redo the
    // segment with breakpoints bracketing each deep dip
    let result = if !on_contour && !dips.is_empty() {
        let mut refined: Vec<f64> = points.to_vec();
        for d in &dips {
            let w = (4.0 * d.width).max(1e-12 * d.omega);
            for x in [
                d.omega - 10.0 * w,
                d.omega - w,
                d.omega,
                d.omega + w,
                d.omega + 10.0 * w,
            ] {
                if x > a && x < b {
                    refined.push(x);
                }
            }
        }
        refined.sort_by(f64::total_cmp);
        refined.dedup();
        let mut resampler = Sampler::new(cf, dcf);
        let r = integrate_partitioned(|w| resampler.value(w), &refined, cfg);
        on_contour |= resampler.root_hits > 0;
        sampler.failures.extend(resampler.failures);
        r
    } else {
        first
    };

    let mut failed = false;
    if let Some(e) = sampler.failures.first() {
        failed = true;
        warnings.push(format!("integrand evaluation failed: {e}"));
    }
    let (value, error) = match result {
        Ok(r) => (r.value, r.error),
        Err(QuadError::MaxSubdivisions { value, error, .. }) => {
            failed = true;
            warnings.push(format!(
                "quadrature on [{a}, {b}] did not reach tolerance (likely a root near the contour)"
            ));
            (value, error)
        }
        Err(e) => {
            failed = true;
            warnings.push(format!("quadrature on [{a}, {b}] failed: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    Segment {
        value,
        error,
        warnings,
        on_contour,
        failed,
    }
}

fn initial_breakpoints(eps: f64, omega: f64) -> Vec<f64> {
    let decades = (omega / eps).log10();
    let n = ((PANELS_PER_DECADE * decades).ceil() as usize).max(1);
    let mut pts: Vec<f64> = (0..=n)
        .map(|k| eps * (omega / eps).powf(k as f64 / n as f64))
        .collect();
    pts[0] = eps;
    pts[n] = omega;
    pts
}

fn doubling_breakpoints(omega: f64) -> Vec<f64> {
    let n = PANELS_PER_DOUBLING;
    (0..=n)
        .map(|k| omega + omega * k as f64 / n as f64)
        .collect()
}

/// True when Δ vanishes at the branch point.
fn origin_singular(cf: &CharFn, opts: &IntegrationOptions) -> bool {
    let at_zero = cf
        .evaluate(Complex64::new(0.0, 0.0))
        .map(|v| v.norm())
        .unwrap_or(0.0);
    if at_zero <= opts.origin_floor {
        return true;
    }
    [0.0, FRAC_PI_4, -FRAC_PI_4].iter().any(|&theta| {
        cf.evaluate(Complex64::from_polar(opts.eps, theta))
            .map(|v| v.norm() <= opts.origin_floor)
            .unwrap_or(true)
    })
}

/// Counts the roots of Δ in the open right half-plane of the first sheet.
pub fn count_unstable(
    cf: &CharFn,
    opts: &IntegrationOptions,
) -> Result<StabilityReport, RoucheError> {
    opts.validate()?;
    let dcf = differentiate(cf);
    let cfg = QuadConfig {
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_panels: MAX_PANELS,
    };
    let alpha_n = cf.alpha_n();
    let m_of = |integral: f64| alpha_n / 2.0 - integral / PI;

    let mut warnings = Vec::new();
    let singular = origin_singular(cf, opts);
    if singular {
        warnings.push(
            "Δ vanishes at the origin (singularity at the branch point); the system is unstable"
                .to_string(),
        );
    }

    let mut on_contour = false;
    let mut failed = false;
    let absorb =
        |seg: Segment, warnings: &mut Vec<String>, on_contour: &mut bool, failed: &mut bool| {
            *on_contour |= seg.on_contour;
            *failed |= seg.failed;
            warnings.extend(seg.warnings);
            (seg.value, seg.error)
        };

    let (mut integral, mut error) = absorb(
        integrate_segment(
            cf,
            &dcf,
            &initial_breakpoints(opts.eps, opts.omega_max),
            &cfg,
        ),
        &mut warnings,
        &mut on_contour,
        &mut failed,
    );
    let mut omega = opts.omega_max;
    let mut doublings = 0;
    let mut tail_deltas = Vec::new();
    let mut converged = opts.max_doublings == 0;
    let mut m_prev = m_of(integral);
    while doublings < opts.max_doublings && !failed {
        let (v, e) = absorb(
            integrate_segment(cf, &dcf, &doubling_breakpoints(omega), &cfg),
            &mut warnings,
            &mut on_contour,
            &mut failed,
        );
        integral += v;
        error += e;
        omega *= 2.0;
        doublings += 1;
        let m = m_of(integral);
        let delta = (m - m_prev).abs();
        tail_deltas.push(delta);
        m_prev = m;
        if delta < opts.residual_warn / 2.0 {
            converged = true;
            break;
        }
    }

    let m_raw = m_of(integral);
    let m_rounded = if m_raw.is_finite() {
        m_raw.round().max(0.0) as u32
    } else {
        0
    };
    let residual = (m_raw - m_rounded as f64).abs();

    let verdict = if singular {
        Verdict::Unstable(m_rounded.max(1))
    } else if failed || on_contour || !m_raw.is_finite() {
        Verdict::Indeterminate
    } else if !converged {
        warnings.push(format!(
            "M did not settle after {doublings} doublings of Ω (last change {:.3e})",
            tail_deltas.last().copied().unwrap_or(f64::NAN)
        ));
        Verdict::Indeterminate
    } else if m_raw < -opts.residual_warn {
        warnings.push(format!(
            "M = {m_raw:.6} is negative; the characteristic function may violate the method's preconditions"
        ));
        Verdict::Indeterminate
    } else if residual > opts.residual_warn {
        warnings.push(format!(
            "M = {m_raw:.6} is {residual:.3} away from the nearest integer"
        ));
        Verdict::Indeterminate
    } else if m_rounded == 0 {
        Verdict::Stable
    } else {
        Verdict::Unstable(m_rounded)
    };

    Ok(StabilityReport {
        alpha_n,
        m_raw,
        m_rounded,
        residual,
        verdict,
        integral_value: integral,
        integral_error_estimate: error,
        omega_used: omega,
        doublings,
        warnings,
        tail_deltas,
    })
}
