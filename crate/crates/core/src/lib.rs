//! Stability analysis of fractional-order systems with distributed delays.
//!
//! A characteristic function `Δ(s) = P₀(s) + Σ Pᵢ(s)·exp(−ζᵢ·s^βᵢ)` is parsed
//! from text ([`expr`]), differentiated ([`calculus`]) and the number of its
//! zeros in the open right half-plane is obtained from the argument principle
//! along the imaginary axis ([`rouche`]). [`laplace`] and [`rational`] provide
//! independent checks.

pub mod calculus;
pub mod expr;
pub mod laplace;
pub mod quadrature;
pub mod rational;
pub mod rouche;

pub use calculus::{differentiate, log_derivative, principal_pow, CalcError, DerivedFn};
pub use expr::{
    bind_and_normalize, parse, Block, CharFn, DelayFactor, ExprError, FracPoly, ParamBinding,
    ParsedExpr, Term,
};
pub use laplace::{
    decay_check, impulse_response, invert_laplace, Decay, ImpulseTrace, InversionOptions,
    LaplaceError,
};
pub use rational::{count_rhp, IntPoly, RationalError};
pub use rouche::{
    count_unstable, integrand, IntegrationOptions, RoucheError, StabilityReport, Verdict,
};
