//! Characteristic functions of fractional-delay systems.
//!
//! A characteristic function has the shape
//!
//! ```text
//! Δ(s) = P₀(s) + Σᵢ Pᵢ(s)·exp(−ζᵢ s^βᵢ)
//! ```
//!
//! where every `Pᵢ` is a fractional-order polynomial `Σ a·s^α`. This module
//! holds the value types, the text DSL ([`parse`]), the normalizer that folds a
//! parsed tree into canonical blocks ([`bind_and_normalize`]) and the canonical
//! formatter (the `Display` impls).

mod format;
mod normalize;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub(crate) use format::write_blocks as format_blocks;
pub use normalize::bind_and_normalize;
pub use parse::{parse, Node, ParsedExpr};

/// Parameter values substituted for free identifiers in a parsed expression.
pub type ParamBinding = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset} (only `exp` is supported)")]
    UnknownFunction { name: String, offset: usize },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
    #[error("expression is not representable as a fractional-delay characteristic function: {0}")]
    NotRepresentable(String),
    #[error(
        "delayed block has degree {delayed_degree} which is not below the leading exponent {alpha_n} of the delay-free part"
    )]
    DegenerateLeading { delayed_degree: f64, alpha_n: f64 },
}

/// One term `coeff·s^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub coeff: f64,
    pub exponent: f64,
}

impl Term {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Term { coeff, exponent }
    }
}

/// A fractional-order polynomial with strictly decreasing exponents.
///
/// Terms sharing a bit-identical exponent are merged and zero coefficients
/// dropped on construction. The empty polynomial is zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FracPoly {
    terms: Vec<Term>,
}

impl FracPoly {
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut terms: Vec<Term> = terms
            .into_iter()
            .map(|t| Term::new(t.coeff, canonical_zero(t.exponent)))
            .collect();
        // stable sort keeps source order among equal exponents, so merging
        // sums coefficients in the order they were written
        terms.sort_by(|a, b| b.exponent.total_cmp(&a.exponent));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exponent.to_bits() == t.exponent.to_bits() => {
                    last.coeff += t.coeff
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        FracPoly { terms: merged }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<f64> {
        self.terms.first().map(|t| t.exponent)
    }

    pub fn scaled(&self, factor: f64) -> FracPoly {
        FracPoly::new(
            self.terms
                .iter()
                .map(|t| Term::new(t.coeff * factor, t.exponent)),
        )
    }
}

/// The factor `exp(−zeta·s^beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayFactor {
    pub zeta: f64,
    pub beta: f64,
}

impl DelayFactor {
    pub fn new(zeta: f64, beta: f64) -> Self {
        DelayFactor { zeta, beta }
    }

    fn canonical_cmp(&self, other: &DelayFactor) -> Ordering {
        self.beta
            .total_cmp(&other.beta)
            .then(self.zeta.total_cmp(&other.zeta))
    }
}

/// One summand `poly(s)·exp(−ζ s^β)`, or just `poly(s)` without a delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub poly: FracPoly,
    pub delay: Option<DelayFactor>,
}

impl Block {
    pub fn new(poly: FracPoly, delay: Option<DelayFactor>) -> Self {
        Block { poly, delay }
    }

    pub fn delay_free(poly: FracPoly) -> Self {
        Block { poly, delay: None }
    }

    pub fn delayed(poly: FracPoly, zeta: f64, beta: f64) -> Self {
        Block {
            poly,
            delay: Some(DelayFactor::new(zeta, beta)),
        }
    }
}

/// A validated characteristic function Δ(s).
///
/// The first block is always the delay-free part `P₀`; delayed blocks follow
/// in ascending `(β, ζ)` order with at most one block per delay factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFn {
    blocks: Vec<Block>,
    alpha_n: f64,
}

impl CharFn {
    /// Builds a characteristic function from arbitrary blocks.
    ///
    /// Blocks with equal delay factors are merged, zero blocks removed and a
    /// `ζ = 0` factor is folded into `P₀`.
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Result<Self, ExprError> {
        let mut p0_terms: Vec<Term> = Vec::new();
        let mut delayed: Vec<(DelayFactor, Vec<Term>)> = Vec::new();
        for block in blocks {
            match block.delay {
                Some(d) if d.zeta != 0.0 => {
                    check_delay(&d)?;
                    let d = DelayFactor::new(d.zeta, canonical_zero(d.beta));
                    match delayed
                        .iter_mut()
                        .find(|(k, _)| k.canonical_cmp(&d) == Ordering::Equal)
                    {
                        Some((_, terms)) => terms.extend_from_slice(block.poly.terms()),
                        None => delayed.push((d, block.poly.terms().to_vec())),
                    }
                }
                Some(d) => {
                    check_delay(&d)?;
                    p0_terms.extend_from_slice(block.poly.terms());
                }
                None => p0_terms.extend_from_slice(block.poly.terms()),
            }
        }

        let p0 = FracPoly::new(p0_terms);
        check_terms(&p0)?;
        let alpha_n = match p0.degree() {
            Some(a) if a > 0.0 => a,
            Some(_) => {
                return Err(ExprError::NotRepresentable(
                    "the delay-free part must have a positive leading exponent".into(),
                ))
            }
            None => {
                return Err(ExprError::NotRepresentable(
                    "the delay-free part is zero".into(),
                ))
            }
        };

        delayed.sort_by(|a, b| a.0.canonical_cmp(&b.0));
        let mut out = vec![Block::delay_free(p0)];
        for (delay, terms) in delayed {
            let poly = FracPoly::new(terms);
            if poly.is_zero() {
                continue;
            }
            check_terms(&poly)?;
            let degree = poly.degree().unwrap_or(0.0);
            if degree >= alpha_n {
                return Err(ExprError::DegenerateLeading {
                    delayed_degree: degree,
                    alpha_n,
                });
            }
            out.push(Block::new(poly, Some(delay)));
        }
        Ok(CharFn {
            blocks: out,
            alpha_n,
        })
    }

    /// Delay-free characteristic function from `(coeff, exponent)` pairs.
    pub fn polynomial(terms: &[(f64, f64)]) -> Result<Self, ExprError> {
        CharFn::new([Block::delay_free(FracPoly::new(
            terms.iter().map(|&(c, e)| Term::new(c, e)),
        ))])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The delay-free part `P₀`.
    pub fn p0(&self) -> &FracPoly {
        &self.blocks[0].poly
    }

    pub fn delayed_blocks(&self) -> &[Block] {
        &self.blocks[1..]
    }

    pub fn has_delays(&self) -> bool {
        self.blocks.len() > 1
    }

    /// Leading exponent of `P₀`.
    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }

    /// `factor·Δ(s)`.
    pub fn scaled(&self, factor: f64) -> Result<CharFn, ExprError> {
        CharFn::new(
            self.blocks
                .iter()
                .map(|b| Block::new(b.poly.scaled(factor), b.delay)),
        )
    }
}

fn canonical_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn check_delay(d: &DelayFactor) -> Result<(), ExprError> {
    if !(d.zeta.is_finite() && d.beta.is_finite()) {
        return Err(ExprError::NotRepresentable(
            "delay parameters must be finite".into(),
        ));
    }
    if d.zeta < 0.0 {
        return Err(ExprError::NotRepresentable(
            "exponential factor has a positive real part".into(),
        ));
    }
    if d.zeta > 0.0 && d.beta <= 0.0 {
        return Err(ExprError::NotRepresentable(
            "delay exponent must be positive".into(),
        ));
    }
    Ok(())
}

fn check_terms(poly: &FracPoly) -> Result<(), ExprError> {
    for t in poly.terms() {
        if !(t.coeff.is_finite() && t.exponent.is_finite()) {
            return Err(ExprError::NotRepresentable(
                "coefficients and exponents must be finite".into(),
            ));
        }
        if t.exponent < 0.0 {
            return Err(ExprError::NotRepresentable(format!(
                "negative power s^{} is not allowed",
                t.exponent
            )));
        }
    }
    Ok(())
}
