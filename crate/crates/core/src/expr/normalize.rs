use std::f64::consts::PI;

use super::parse::{Node, ParsedExpr};
use super::{Block, CharFn, DelayFactor, ExprError, FracPoly, ParamBinding, Term};

/// `coeff·s^exponent·exp(−ζ s^β)` after distribution.
#[derive(Debug, Clone, Copy)]
struct Mono {
    coeff: f64,
    exponent: f64,
    delay: Option<DelayFactor>,
}

impl Mono {
    fn constant(c: f64) -> Self {
        Mono {
            coeff: c,
            exponent: 0.0,
            delay: None,
        }
    }

    fn same_shape(&self, other: &Mono) -> bool {
        self.exponent.to_bits() == other.exponent.to_bits()
            && match (self.delay, other.delay) {
                (None, None) => true,
                (Some(a), Some(b)) => {
                    a.beta.to_bits() == b.beta.to_bits() && a.zeta.to_bits() == b.zeta.to_bits()
                }
                _ => false,
            }
    }

    fn is_constant(&self) -> bool {
        self.exponent == 0.0 && self.delay.is_none()
    }
}

type Sum = Vec<Mono>;

fn not_repr(msg: impl Into<String>) -> ExprError {
    ExprError::NotRepresentable(msg.into())
}

fn canonical_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn push(sum: &mut Sum, m: Mono) {
    let m = Mono {
        exponent: canonical_zero(m.exponent),
        ..m
    };
    match sum.iter_mut().find(|x| x.same_shape(&m)) {
        Some(x) => x.coeff += m.coeff,
        None => sum.push(m),
    }
}

fn product(a: &Sum, b: &Sum) -> Result<Sum, ExprError> {
    let mut out = Sum::new();
    for x in a {
        for y in b {
            let delay = match (x.delay, y.delay) {
                (None, d) | (d, None) => d,
                (Some(p), Some(q)) if p.beta.to_bits() == q.beta.to_bits() => {
                    Some(DelayFactor::new(p.zeta + q.zeta, p.beta))
                }
                (Some(_), Some(_)) => {
                    return Err(not_repr(
                        "product of exponential factors with different powers of s",
                    ))
                }
            };
            push(
                &mut out,
                Mono {
                    coeff: x.coeff * y.coeff,
                    exponent: x.exponent + y.exponent,
                    delay,
                },
            );
        }
    }
    Ok(out)
}

/// Value of a sum that does not depend on `s`, `None` otherwise.
fn as_constant(sum: &Sum) -> Option<f64> {
    let mut c = 0.0;
    for m in sum {
        if m.is_constant() {
            c += m.coeff;
        } else if m.coeff != 0.0 {
            return None;
        }
    }
    Some(c)
}

fn exponential(arg: Sum) -> Result<Mono, ExprError> {
    let mut c = 0.0;
    let mut rest: Vec<Mono> = Vec::new();
    for m in arg {
        if m.delay.is_some() && m.coeff != 0.0 {
            return Err(not_repr("nested exponential"));
        }
        if m.is_constant() {
            c += m.coeff;
        } else if m.coeff != 0.0 {
            rest.push(m);
        }
    }
    let scale = c.exp();
    match rest.as_slice() {
        [] => Ok(Mono::constant(scale)),
        [m] if m.coeff > 0.0 => Err(not_repr("exponential factor has a positive real part")),
        [m] if m.exponent < 0.0 => Err(not_repr("exponential of a negative power of s")),
        [m] => Ok(Mono {
            coeff: scale,
            exponent: 0.0,
            delay: Some(DelayFactor::new(-m.coeff, m.exponent)),
        }),
        _ => Err(not_repr("exponential of a sum with mixed powers of s")),
    }
}

fn fold(node: &Node, params: &ParamBinding) -> Result<Sum, ExprError> {
    Ok(match node {
        Node::Number(x) => vec![Mono::constant(*x)],
        Node::Pi => vec![Mono::constant(PI)],
        Node::Param(name) => match params.get(name) {
            Some(&v) => vec![Mono::constant(v)],
            None => return Err(ExprError::UnboundParameter(name.clone())),
        },
        Node::Power(e) => {
            let exponent = as_constant(&fold(e, params)?)
                .ok_or_else(|| not_repr("exponent of s must be a constant"))?;
            vec![Mono {
                coeff: 1.0,
                exponent,
                delay: None,
            }]
        }
        Node::Neg(x) => fold(x, params)?
            .into_iter()
            .map(|m| Mono {
                coeff: -m.coeff,
                ..m
            })
            .collect(),
        Node::Add(a, b) => {
            let mut out = fold(a, params)?;
            for m in fold(b, params)? {
                push(&mut out, m);
            }
            out
        }
        Node::Sub(a, b) => {
            let mut out = fold(a, params)?;
            for m in fold(b, params)? {
                push(
                    &mut out,
                    Mono {
                        coeff: -m.coeff,
                        ..m
                    },
                );
            }
            out
        }
        Node::Mul(a, b) => product(&fold(a, params)?, &fold(b, params)?)?,
        Node::Div(a, b) => {
            let divisor = as_constant(&fold(b, params)?).ok_or_else(|| {
                not_repr("division by an expression in s (quotients are not supported)")
            })?;
            if divisor == 0.0 {
                return Err(not_repr("division by zero"));
            }
            fold(a, params)?
                .into_iter()
                .map(|m| Mono {
                    coeff: m.coeff / divisor,
                    ..m
                })
                .collect()
        }
        Node::Exp(arg) => vec![exponential(fold(arg, params)?)?],
    })
}

/// Substitutes parameters, distributes products over sums and groups the
/// result into canonical blocks.
pub fn bind_and_normalize(expr: &ParsedExpr, params: &ParamBinding) -> Result<CharFn, ExprError> {
    let sum = fold(&expr.root, params)?;
    CharFn::new(
        sum.into_iter()
            .map(|m| Block::new(FracPoly::new([Term::new(m.coeff, m.exponent)]), m.delay)),
    )
}
