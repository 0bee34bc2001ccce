//! Symbolic differentiation and principal-branch evaluation of Δ and Δ′.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Block, CharFn, FracPoly, Term};

/// Floor below which `|Δ(s)|` is treated as an exact root.
pub const DEFAULT_ROOT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CalcError {
    #[error("s = {0} lies on the branch cut (negative real axis)")]
    BranchCutViolation(Complex64),
    #[error("negative power of s evaluated at s = 0")]
    DomainError,
    #[error("|Δ(s)| = {magnitude:e} at s = {s}: root on the contour")]
    RootOnContour { s: Complex64, magnitude: f64 },
}

/// Δ′(s) in block form. Exponents may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFn {
    blocks: Vec<Block>,
}

impl DerivedFn {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn evaluate(&self, s: Complex64) -> Result<Complex64, CalcError> {
        evaluate_blocks(&self.blocks, s)
    }
}

impl fmt::Display for DerivedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::expr::format_blocks(f, &self.blocks)
    }
}

impl CharFn {
    pub fn evaluate(&self, s: Complex64) -> Result<Complex64, CalcError> {
        evaluate_blocks(self.blocks(), s)
    }
}

/// Δ′ by the power rule on `P₀` and the product rule on each delayed block:
/// `d/ds [P·exp(−ζ s^β)] = (P′ − ζβ s^{β−1}·P)·exp(−ζ s^β)`.
pub fn differentiate(cf: &CharFn) -> DerivedFn {
    let mut blocks = Vec::with_capacity(cf.blocks().len());
    for block in cf.blocks() {
        let mut terms: Vec<Term> = block
            .poly
            .terms()
            .iter()
            .filter(|t| t.exponent != 0.0)
            .map(|t| Term::new(t.coeff * t.exponent, t.exponent - 1.0))
            .collect();
        if let Some(d) = block.delay {
            let k = d.zeta * d.beta;
            terms.extend(
                block
                    .poly
                    .terms()
                    .iter()
                    .map(|t| Term::new(-k * t.coeff, t.exponent + d.beta - 1.0)),
            );
        }
        let poly = FracPoly::new(terms);
        if !poly.is_zero() {
            blocks.push(Block::new(poly, block.delay));
        }
    }
    DerivedFn { blocks }
}

/// `Δ′(s)/Δ(s)` on the principal sheet.
pub fn log_derivative(cf: &CharFn, dcf: &DerivedFn, s: Complex64) -> Result<Complex64, CalcError> {
    log_derivative_with_floor(cf, dcf, s, DEFAULT_ROOT_FLOOR)
}

pub fn log_derivative_with_floor(
    cf: &CharFn,
    dcf: &DerivedFn,
    s: Complex64,
    floor: f64,
) -> Result<Complex64, CalcError> {
    let value = cf.evaluate(s)?;
    let magnitude = value.norm();
    if magnitude < floor {
        return Err(CalcError::RootOnContour { s, magnitude });
    }
    Ok(dcf.evaluate(s)? / value)
}

/// Principal power `s^alpha` with `arg s ∈ (−π, π]`.
///
/// Small integer powers use repeated multiplication.
pub fn principal_pow(s: Complex64, alpha: f64) -> Complex64 {
    if alpha == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if alpha.fract() == 0.0 && alpha.abs() <= 8.0 {
        let n = alpha.abs() as u32;
        let mut acc = s;
        for _ in 1..n {
            acc *= s;
        }
        return if alpha < 0.0 { acc.inv() } else { acc };
    }
    if s.re == 0.0 && s.im == 0.0 {
        return if alpha > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    Complex64::from_polar(s.norm().powf(alpha), alpha * s.arg())
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

fn check_domain(blocks: &[Block], s: Complex64) -> Result<(), CalcError> {
    let exponents = || {
        blocks.iter().flat_map(|b| {
            b.poly
                .terms()
                .iter()
                .map(|t| t.exponent)
                .chain(b.delay.map(|d| d.beta))
        })
    };
    if s.im == 0.0 && s.re < 0.0 && exponents().any(|e| !is_integer(e)) {
        return Err(CalcError::BranchCutViolation(s));
    }
    if s.im == 0.0 && s.re == 0.0 && exponents().any(|e| e < 0.0) {
        return Err(CalcError::DomainError);
    }
    Ok(())
}

/// Neumaier-compensated complex sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

fn two_sum(sum: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let err = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, err)
}

impl CompensatedSum {
    fn add(&mut self, x: Complex64) {
        let (re, ere) = two_sum(self.sum.re, x.re);
        let (im, eim) = two_sum(self.sum.im, x.im);
        self.sum = Complex64::new(re, im);
        self.carry += Complex64::new(ere, eim);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn evaluate_poly(poly: &FracPoly, s: Complex64) -> Complex64 {
    let mut acc = CompensatedSum::default();
    for t in poly.terms() {
        acc.add(principal_pow(s, t.exponent) * t.coeff);
    }
    acc.total()
}

/// Evaluates `Σ poly(s)·exp(−ζ s^β)` in block order.
pub fn evaluate_blocks(blocks: &[Block], s: Complex64) -> Result<Complex64, CalcError> {
    check_domain(blocks, s)?;
    let mut acc = CompensatedSum::default();
    for block in blocks {
        let mut v = evaluate_poly(&block.poly, s);
        if let Some(d) = block.delay {
            v *= (-d.zeta * principal_pow(s, d.beta)).exp();
        }
        acc.add(v);
    }
    Ok(acc.total())
}
