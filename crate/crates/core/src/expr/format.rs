use std::fmt::{self, Write};

use super::{Block, CharFn, DelayFactor, FracPoly, Term};

/// Shortest decimal that parses back to the same `f64`.
fn number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn power(exponent: f64) -> String {
    if exponent == 1.0 {
        "s".to_string()
    } else if exponent < 0.0 {
        format!("s^({})", number(exponent))
    } else {
        format!("s^{}", number(exponent))
    }
}

/// Unsigned rendering of `|coeff|·s^exponent`, optionally multiplied by a
/// trailing factor.
fn magnitude(t: &Term, tail: Option<&str>) -> String {
    let c = t.coeff.abs();
    let mut parts: Vec<String> = Vec::new();
    if c != 1.0 || (t.exponent == 0.0 && tail.is_none()) {
        parts.push(number(c));
    }
    if t.exponent != 0.0 {
        parts.push(power(t.exponent));
    }
    if let Some(tail) = tail {
        parts.push(tail.to_string());
    }
    parts.join("*")
}

fn delay(d: &DelayFactor) -> String {
    if d.zeta == 1.0 {
        format!("exp(-{})", power(d.beta))
    } else {
        format!("exp(-{}*{})", number(d.zeta), power(d.beta))
    }
}

/// Appends a signed piece, `first` controls whether a leading `+` is omitted.
fn signed(out: &mut String, negative: bool, body: &str, first: bool) {
    match (first, negative) {
        (true, false) => out.push_str(body),
        (true, true) => {
            out.push('-');
            out.push_str(body);
        }
        (false, false) => {
            let _ = write!(out, " + {body}");
        }
        (false, true) => {
            let _ = write!(out, " - {body}");
        }
    }
}

fn write_poly(out: &mut String, poly: &FracPoly, mut first: bool) -> bool {
    for t in poly.terms() {
        signed(out, t.coeff < 0.0, &magnitude(t, None), first);
        first = false;
    }
    first
}

fn write_block(out: &mut String, block: &Block, first: bool) -> bool {
    let Some(d) = block.delay.as_ref() else {
        return write_poly(out, &block.poly, first);
    };
    let factor = delay(d);
    match block.poly.terms() {
        [] => first,
        [t] => {
            signed(out, t.coeff < 0.0, &magnitude(t, Some(&factor)), first);
            false
        }
        _ => {
            let mut inner = String::new();
            write_poly(&mut inner, &block.poly, true);
            signed(out, false, &format!("({inner})*{factor}"), first);
            false
        }
    }
}

pub(crate) fn write_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Block]) -> fmt::Result {
    let mut out = String::new();
    let mut first = true;
    for block in blocks {
        first = write_block(&mut out, block, first);
    }
    if first {
        out.push('0');
    }
    f.write_str(&out)
}

impl fmt::Display for FracPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if write_poly(&mut out, self, true) {
            out.push('0');
        }
        f.write_str(&out)
    }
}

impl fmt::Display for CharFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, self.blocks())
    }
}
