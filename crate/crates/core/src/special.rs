//! Numeric kernels: adaptive Gauss–Kronrod quadrature, the two exponential
//! integrals behind the per-fade moments of `log(1 + γ)`, and the standard
//! normal CDF together with a log-domain variant that survives deep tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSettings {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let settings = QuadratureSettings {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::domain(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::domain(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("max_subdivisions must be >= 1"));
        }
        Ok(())
    }

    /// Length of the finite window `[a, a + L]` that replaces `[a, ∞)` for
    /// integrands decaying like `e^{-t}`.
    fn tail_window(&self) -> f64 {
        -(self.abs_tol.min(self.rel_tol) * 1e-3).ln()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub abs_err: f64,
    pub subdivisions: usize,
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        err: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over the intervals
/// delimited by `breakpoints` (sorted, at least two entries). The segment with
/// the largest error estimate is bisected until the summed estimate drops
/// below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    settings: &QuadratureSettings,
) -> Result<Quadrature> {
    settings.validate()?;
    if breakpoints.len() < 2 {
        return Err(Error::domain("integration needs at least two breakpoints"));
    }
    if breakpoints.iter().any(|x| !x.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::domain("breakpoints must be finite and strictly increasing"));
    }

    let mut heap: BinaryHeap<Segment> = breakpoints
        .windows(2)
        .map(|w| kronrod15(&f, w[0], w[1]))
        .collect();
    let mut subdivisions = heap.len();

    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.err).sum();
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::Numeric("integrand produced a non-finite value".into()));
        }
        if err <= settings.abs_tol.max(settings.rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                abs_err: err,
                subdivisions,
            });
        }
        if subdivisions >= settings.max_subdivisions {
            return Err(Error::Numeric(format!(
                "quadrature did not converge within {} subdivisions (estimate {value:e}, error {err:e})",
                settings.max_subdivisions
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numeric("interval bisection underflowed".into()));
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        subdivisions += 1;
    }
}

fn check_power(power: f64) -> Result<()> {
    if power.is_nan() || power <= 0.0 || power.is_infinite() {
        return Err(Error::domain(format!("average SNR must be finite and > 0, got {power}")));
    }
    Ok(())
}

/// Breakpoints for `∫_{1/P}^{∞}`: one per decade below `t = 1`, the point
/// `t = 1` itself, and the truncated upper end.
fn tail_breakpoints(power: f64, settings: &QuadratureSettings) -> Vec<f64> {
    let lower = power.recip();
    let upper = lower + settings.tail_window();
    let mut points = vec![lower];
    if lower < 1.0 {
        let mut t = 10f64.powf(lower.log10().floor() + 1.0);
        while t < 1.0 {
            if t > lower {
                points.push(t);
            }
            t *= 10.0;
        }
        points.push(1.0);
    }
    points.push(upper);
    points
}

/// `α(P) = ∫_{1/P}^{∞} e^{-t}/t dt`, i.e. the exponential integral `E1(1/P)`.
pub fn alpha(power: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_power(power)?;
    let points = tail_breakpoints(power, settings);
    Ok(integrate(|t| (-t).exp() / t, &points, settings)?.value)
}

/// `β(P) = ∫_{1/P}^{∞} ln(t) e^{-t}/t dt`. The integrand changes sign at
/// `t = 1`, which is always a breakpoint when it lies inside the range.
pub fn beta(power: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_power(power)?;
    let points = tail_breakpoints(power, settings);
    Ok(integrate(|t| t.ln() * (-t).exp() / t, &points, settings)?.value)
}

/// Standard normal CDF without input checking; NaN propagates.
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("normal_cdf of NaN"));
    }
    Ok(phi(x))
}

const LOG_PHI_ASYMPTOTIC_BELOW: f64 = -8.0;

/// `ln Φ(x)` without input checking. Below `x = -8` the Mills-ratio series
/// `ln Φ(x) = -x²/2 - ln(-x) - ln(2π)/2 + ln(1 - 1/x² + 3/x⁴ - …)` is used,
/// truncated at its smallest term.
pub(crate) fn log_phi(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= LOG_PHI_ASYMPTOTIC_BELOW {
        if x > 0.0 {
            return (-phi(-x)).ln_1p();
        }
        return phi(x).ln();
    }
    let inv_x2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    let mut k = 1.0;
    loop {
        let next = -term * (2.0 * k - 1.0) * inv_x2;
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        series += next;
        term = next;
        k += 1.0;
    }
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// Natural log of the standard normal CDF, accurate far into the lower tail
/// where `Φ` itself underflows.
pub fn log_normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("log_normal_cdf of NaN"));
    }
    Ok(log_phi(x))
}
