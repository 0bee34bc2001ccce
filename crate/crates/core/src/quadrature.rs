//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.
//!
//! The panel with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol·|I|)`. Panel results are summed in
//! ascending order of their left endpoint, so the returned value depends only
//! on the integrand and the configuration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_panels: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error(
        "tolerance not reached after {panels} panels (value {value}, error estimate {error:e})"
    )]
    MaxSubdivisions {
        value: f64,
        error: f64,
        panels: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Heap entry ordered by error, ties broken by position for determinism.
struct Ranked {
    error: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.index.cmp(&self.index))
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let (xl, xr) = (center - dx, center + dx);
        let (f1, f2) = (f(xl), f(xr));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: xl });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: xr });
        }
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_k * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { a, b, value, error })
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + carry
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult, QuadError> {
    integrate_partitioned(f, &[a, b], cfg)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// given by consecutive breakpoints.
pub fn integrate_partitioned<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult, QuadError> {
    let (first, last) = match points {
        [first, .., last] => (*first, *last),
        _ => {
            return Err(QuadError::InvalidInterval {
                a: f64::NAN,
                b: f64::NAN,
            })
        }
    };
    if !points.iter().all(|x| x.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QuadError::InvalidInterval { a: first, b: last });
    }

    let mut panels: Vec<Panel> = Vec::with_capacity(points.len() * 4);
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let p = gk15(&mut f, w[0], w[1])?;
        heap.push(Ranked {
            error: p.error,
            index: panels.len(),
        });
        panels.push(p);
    }

    let mut value: f64 = panels.iter().map(|p| p.value).sum();
    let mut error: f64 = panels.iter().map(|p| p.error).sum();
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            // running sums drift; confirm against fresh sums
            value = panels.iter().map(|p| p.value).sum();
            error = panels.iter().map(|p| p.error).sum();
            if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
                break;
            }
        }
        if panels.len() >= cfg.max_panels {
            return Err(QuadError::MaxSubdivisions {
                value: finish(&panels).value,
                error,
                panels: panels.len(),
            });
        }
        let Some(Ranked { index, .. }) = heap.pop() else {
            break;
        };
        let worst = panels[index];
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(QuadError::MaxSubdivisions {
                value: finish(&panels).value,
                error,
                panels: panels.len(),
            });
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels[index] = left;
        heap.push(Ranked {
            error: left.error,
            index,
        });
        heap.push(Ranked {
            error: right.error,
            index: panels.len(),
        });
        panels.push(right);
    }
    Ok(finish(&panels))
}

fn finish(panels: &[Panel]) -> QuadResult {
    let mut ordered: Vec<&Panel> = panels.iter().collect();
    ordered.sort_by(|x, y| x.a.total_cmp(&y.a));
    QuadResult {
        value: neumaier(ordered.iter().map(|p| p.value)),
        error: neumaier(ordered.iter().map(|p| p.error)),
        panels: panels.len(),
    }
}
