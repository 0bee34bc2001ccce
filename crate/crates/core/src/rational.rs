//! Ground-truth root counts for delay-free integer-order polynomials.
//!
//! Roots come from the eigenvalues of the companion matrix, polished with a
//! few Newton steps on the original coefficients.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::expr::CharFn;

/// Highest degree the oracle accepts.
pub const MAX_DEGREE: usize = 12;

const INTEGER_TOL: f64 = 1e-12;
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RationalError {
    #[error("not a delay-free integer-order polynomial: {0}")]
    NotRational(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("root finding did not converge (backward error {0:e})")]
    NonConvergence(f64),
    #[error("root {0} lies on the imaginary axis")]
    BoundaryRoot(Complex64),
}

/// Dense real polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct IntPoly {
    coeffs: Vec<f64>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, RationalError> {
        let degree = coeffs.len().saturating_sub(1);
        if degree < 1 {
            return Err(RationalError::InvalidPolynomial(
                "degree must be at least 1".into(),
            ));
        }
        if coeffs[degree] == 0.0 {
            return Err(RationalError::InvalidPolynomial(
                "leading coefficient is zero".into(),
            ));
        }
        if degree > MAX_DEGREE {
            return Err(RationalError::InvalidPolynomial(format!(
                "degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(RationalError::InvalidPolynomial(
                "non-finite coefficient".into(),
            ));
        }
        Ok(IntPoly { coeffs })
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self, RationalError> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        IntPoly::new(c.iter().map(|z| z.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `|p(z)| / Σ|cₖ|·|z|ᵏ`.
    fn backward_error(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.abs());
        self.eval(z).norm() / scale
    }
}

/// Converts a delay-free characteristic function with integer exponents.
pub fn from_charfn(cf: &CharFn) -> Result<IntPoly, RationalError> {
    if cf.has_delays() {
        return Err(RationalError::NotRational("has delay factors".into()));
    }
    let terms = cf.p0().terms();
    let mut degree = 0usize;
    let mut pairs = Vec::with_capacity(terms.len());
    for t in terms {
        let k = t.exponent.round();
        if (t.exponent - k).abs() > INTEGER_TOL || k < 0.0 {
            return Err(RationalError::NotRational(format!(
                "non-integer exponent {}",
                t.exponent
            )));
        }
        let k = k as usize;
        if k > MAX_DEGREE {
            return Err(RationalError::NotRational(format!(
                "degree {k} exceeds {MAX_DEGREE}"
            )));
        }
        degree = degree.max(k);
        pairs.push((k, t.coeff));
    }
    let mut coeffs = vec![0.0; degree + 1];
    for (k, c) in pairs {
        coeffs[k] += c;
    }
    IntPoly::new(coeffs)
}

/// All roots with multiplicity.
pub fn roots(p: &IntPoly) -> Result<Vec<Complex64>, RationalError> {
    let n = p.degree();
    let lead = p.coeffs[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -p.coeffs[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<Complex64> = companion.complex_eigenvalues().iter().copied().collect();
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = p.eval_with_derivative(*z);
            if d.norm() == 0.0 {
                break;
            }
            let next = *z - v / d;
            if p.backward_error(next) < p.backward_error(*z) {
                *z = next;
            } else {
                break;
            }
        }
    }
    let worst = roots
        .iter()
        .map(|&z| p.backward_error(z))
        .fold(0.0, f64::max);
    if worst.is_nan() || worst >= 1e-8 {
        return Err(RationalError::NonConvergence(worst));
    }
    Ok(roots)
}

/// Number of roots with `Re z > margin`.
pub fn count_rhp(p: &IntPoly, margin: f64) -> Result<usize, RationalError> {
    let rs = roots(p)?;
    if let Some(&z) = rs.iter().find(|z| z.re.abs() < BOUNDARY_TOL) {
        return Err(RationalError::BoundaryRoot(z));
    }
    Ok(rs.iter().filter(|z| z.re > margin).count())
}
