//! Test-side generators and reference evaluators, independent of the library
//! code paths they check.
#![allow(dead_code)]

use fracdelay::expr::Node;
use fracdelay::{Block, CharFn, FracPoly, Term};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn nonzero(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Random fractional-order CharFn with up to two delayed blocks.
pub fn random_charfn(rng: &mut impl Rng) -> CharFn {
    random_charfn_with(rng, 1.5)
}

/// As [`random_charfn`] with delay exponents in `[0.2, beta_max)`.
pub fn random_charfn_with(rng: &mut impl Rng, beta_max: f64) -> CharFn {
    loop {
        let alpha_n = rng.random_range(0.5..3.0);
        let mut p0 = vec![Term::new(nonzero(rng, 0.5, 2.0), alpha_n)];
        for _ in 0..rng.random_range(0..4) {
            let e = if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..alpha_n)
            };
            p0.push(Term::new(nonzero(rng, 0.1, 5.0), e));
        }
        let mut blocks = vec![Block::delay_free(FracPoly::new(p0))];
        for _ in 0..rng.random_range(0..3) {
            let mut terms = Vec::new();
            for _ in 0..rng.random_range(1..3) {
                terms.push(Term::new(
                    nonzero(rng, 0.1, 3.0),
                    rng.random_range(0.0..alpha_n),
                ));
            }
            blocks.push(Block::delayed(
                FracPoly::new(terms),
                rng.random_range(0.1..2.0),
                rng.random_range(0.2..beta_max),
            ));
        }
        if let Ok(cf) = CharFn::new(blocks) {
            return cf;
        }
    }
}

/// Random point with `Re s ∈ [re.0, re.1]`, `Im s ∈ [-im, im]`.
pub fn random_point(rng: &mut impl Rng, re: (f64, f64), im: f64) -> Complex64 {
    Complex64::new(rng.random_range(re.0..re.1), rng.random_range(-im..im))
}

/// Real roots and conjugate pairs with `|Re| ≥ 0.1` inside `[-3, 3]²`.
pub fn random_roots(rng: &mut impl Rng, degree: usize) -> Vec<Complex64> {
    let pairs = rng.random_range(0..=degree / 2);
    let mut roots = Vec::with_capacity(degree);
    for _ in 0..pairs {
        let z = Complex64::new(nonzero(rng, 0.1, 3.0), rng.random_range(0.05..3.0));
        roots.push(z);
        roots.push(z.conj());
    }
    while roots.len() < degree {
        roots.push(Complex64::new(nonzero(rng, 0.1, 3.0), 0.0));
    }
    roots
}

/// Monic coefficients (ascending) of `Π (s − r)`.
pub fn expand_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

pub fn polynomial_charfn(coeffs: &[f64]) -> CharFn {
    let terms: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, k as f64))
        .collect();
    CharFn::polynomial(&terms).unwrap()
}

/// Evaluates a parse tree directly with `Complex64::powf`/`exp`.
pub fn eval_node(node: &Node, s: Complex64, params: &dyn Fn(&str) -> f64) -> Complex64 {
    let r = |n: &Node| eval_node(n, s, params);
    match node {
        Node::Number(x) => Complex64::new(*x, 0.0),
        Node::Pi => Complex64::new(std::f64::consts::PI, 0.0),
        Node::Param(p) => Complex64::new(params(p), 0.0),
        Node::Power(e) => {
            let e = r(e).re;
            (s.ln() * e).exp()
        }
        Node::Neg(a) => -r(a),
        Node::Add(a, b) => r(a) + r(b),
        Node::Sub(a, b) => r(a) - r(b),
        Node::Mul(a, b) => r(a) * r(b),
        Node::Div(a, b) => r(a) / r(b),
        Node::Exp(a) => r(a).exp(),
    }
}

// ---------------------------------------------------------------------------
// Cancellation-free central differences.
//
// The naive quotient (f(s+h) − f(s−h))/2h loses about log10(|f|/(h|f′|))
// digits, which swamps the O(h²) truncation error for h ≤ 1e-4. The helpers
// below evaluate the numerator from differences that are small by
// construction.

fn log1p_c(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let re = 0.5 * (2.0 * x + x * x + y * y).ln_1p();
    Complex64::new(re, y.atan2(1.0 + x))
}

fn expm1_c(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let cos_m1 = -2.0 * half * half;
    Complex64::new(z.re.exp_m1() * z.im.cos() + cos_m1, z.re.exp() * z.im.sin())
}

/// `(s+h)^α − (s−h)^α` on the principal branch, for `|h| ≪ |s|`.
fn pow_diff(s: Complex64, h: f64, alpha: f64) -> Complex64 {
    if alpha == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let u = Complex64::new(h, 0.0) / s;
    let base = (s.ln() * alpha).exp();
    base * (expm1_c(log1p_c(u) * alpha) - expm1_c(log1p_c(-u) * alpha))
}

fn pow_at(s: Complex64, alpha: f64) -> Complex64 {
    if alpha == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        (s.ln() * alpha).exp()
    }
}

/// `(P(s+h) − P(s−h), P(s+h) + P(s−h))`.
fn poly_pair(p: &FracPoly, s: Complex64, h: f64) -> (Complex64, Complex64) {
    let (sp, sm) = (s + h, s - h);
    let mut diff = Complex64::new(0.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for t in p.terms() {
        diff += pow_diff(s, h, t.exponent) * t.coeff;
        sum += (pow_at(sp, t.exponent) + pow_at(sm, t.exponent)) * t.coeff;
    }
    (diff, sum)
}

/// `(Δ(s+h) − Δ(s−h)) / 2h` computed without subtractive cancellation.
pub fn central_difference(cf: &CharFn, s: Complex64, h: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for block in cf.blocks() {
        let (pd, ps) = poly_pair(&block.poly, s, h);
        match block.delay {
            None => total += pd,
            Some(d) => {
                let em = (-d.zeta * pow_at(s - h, d.beta)).exp();
                let ep = (-d.zeta * pow_at(s + h, d.beta)).exp();
                let ed = em * expm1_c(-d.zeta * pow_diff(s, h, d.beta));
                total += pd * (ep + em) * 0.5 + ps * 0.5 * ed;
            }
        }
    }
    total / (2.0 * h)
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(hs: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
