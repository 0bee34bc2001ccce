//! Numerical inverse Laplace transform and impulse responses of `1/Δ(s)`.
//!
//! The inversion samples `F` on the vertical line `Re s = a/t`:
//!
//! ```text
//! f(t) ≈ (e^a / t)·Σₙ wₙ·(−1)ⁿ·Re F((a + iπn)/t),   n = 0 … ns + nd
//! ```
//!
//! with `w₀ = 1/2`, `wₙ = 1` up to `ns`, and the last `nd` terms damped by
//! cumulative binomial (Euler) weights.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::calculus::CalcError;
use crate::expr::CharFn;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaplaceError {
    #[error("invalid inversion options: {0}")]
    InvalidOptions(String),
    #[error("time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("invalid trace request: {0}")]
    InvalidGrid(String),
    #[error("transform evaluation failed: {0}")]
    Evaluation(#[from] CalcError),
    #[error("transform is not finite at s = {0}")]
    NonFinite(Complex64),
    #[error("decay check needs at least 16 valid samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Contour shift `a`; the line sits at `Re s = a/t`.
    pub shift: f64,
    /// Number of plainly summed terms `ns`.
    pub series_len: usize,
    /// Number of Euler-weighted tail terms `nd`.
    pub euler_depth: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            shift: 6.0,
            series_len: 20,
            euler_depth: 19,
        }
    }
}

impl InversionOptions {
    pub fn validate(&self) -> Result<(), LaplaceError> {
        if !(self.shift > 0.0 && self.shift.is_finite()) {
            return Err(LaplaceError::InvalidOptions(
                "shift must be positive".into(),
            ));
        }
        if self.series_len < 1 || self.euler_depth < 1 {
            return Err(LaplaceError::InvalidOptions(
                "series_len and euler_depth must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `wₙ·(−1)ⁿ·e^a` for `n = 0 … ns + nd`.
    fn weights(&self) -> Vec<f64> {
        let (ns, nd) = (self.series_len, self.euler_depth);
        let scale = self.shift.exp();
        let mut w: Vec<f64> = (0..=ns + nd)
            .map(|n| if n % 2 == 0 { scale } else { -scale })
            .collect();
        w[0] *= 0.5;
        // binom[j] = C(nd, j) / 2^nd
        let mut binom = vec![0.0; nd + 1];
        binom[0] = 0.5f64.powi(nd as i32);
        for j in 1..=nd {
            binom[j] = binom[j - 1] * (nd + 1 - j) as f64 / j as f64;
        }
        for k in 1..=nd {
            let tail: f64 = binom[..=nd - k].iter().sum();
            w[ns + k] *= tail;
        }
        w
    }
}

/// Inverts `f` at a single time `t > 0`.
pub fn invert_laplace<F>(f: F, t: f64, opts: &InversionOptions) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Result<Complex64, LaplaceError>,
{
    opts.validate()?;
    invert_with_weights(&f, t, opts.shift, &opts.weights())
}

fn invert_with_weights<F>(f: &F, t: f64, shift: f64, weights: &[f64]) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Result<Complex64, LaplaceError>,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(LaplaceError::InvalidTime(t));
    }
    let mut acc = 0.0;
    for (n, w) in weights.iter().enumerate() {
        let s = Complex64::new(shift, std::f64::consts::PI * n as f64) / t;
        let v = f(s)?;
        if !v.is_finite() {
            return Err(LaplaceError::NonFinite(s));
        }
        acc += w * v.re;
    }
    Ok(acc / t)
}

/// Sampled impulse response. `None` marks samples whose inversion failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseTrace {
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl ImpulseTrace {
    pub fn valid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .filter_map(|(&t, v)| v.map(|v| (t, v)))
    }
}

/// `1/Δ(s)` as a transform.
pub fn transfer_function(
    cf: &CharFn,
) -> impl Fn(Complex64) -> Result<Complex64, LaplaceError> + Sync + '_ {
    move |s| {
        let d = cf.evaluate(s)?;
        if d.norm() == 0.0 {
            return Err(LaplaceError::NonFinite(s));
        }
        Ok(d.inv())
    }
}

/// Impulse response of `1/Δ(s)` on the grid `t_max/n, 2·t_max/n, …, t_max`.
pub fn impulse_response(
    cf: &CharFn,
    t_max: f64,
    n_points: usize,
    opts: &InversionOptions,
) -> Result<ImpulseTrace, LaplaceError> {
    opts.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(LaplaceError::InvalidGrid("t_max must be positive".into()));
    }
    if n_points < 2 {
        return Err(LaplaceError::InvalidGrid("need at least 2 points".into()));
    }
    let weights = opts.weights();
    let h = transfer_function(cf);
    let times: Vec<f64> = (1..=n_points)
        .map(|k| t_max * k as f64 / n_points as f64)
        .collect();
    let values = times
        .par_iter()
        .map(|&t| invert_with_weights(&h, t, opts.shift, &weights).ok())
        .collect();
    Ok(ImpulseTrace { times, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    Decaying,
    Growing,
    Inconclusive,
}

impl std::fmt::Display for Decay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decay::Decaying => "Decaying",
            Decay::Growing => "Growing",
            Decay::Inconclusive => "Inconclusive",
        })
    }
}

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Compares the RMS of the last quarter of the valid samples with the RMS of
/// the second quarter.
pub fn decay_check(trace: &ImpulseTrace) -> Result<Decay, LaplaceError> {
    let values: Vec<f64> = trace.valid().map(|(_, v)| v).collect();
    let n = values.len();
    if n < 16 {
        return Err(LaplaceError::TooFewSamples(n));
    }
    let q = n / 4;
    let early = rms(&values[q..2 * q]);
    let late = rms(&values[n - q..]);
    Ok(if early == 0.0 {
        if late == 0.0 {
            Decay::Inconclusive
        } else {
            Decay::Growing
        }
    } else {
        let ratio = late / early;
        if ratio < 0.5 {
            Decay::Decaying
        } else if ratio > 2.0 {
            Decay::Growing
        } else {
            Decay::Inconclusive
        }
    })
}
