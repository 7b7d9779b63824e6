//! Independent reference computations shared by the integration tests.
//!
//! None of these call the library's numerics: the exponential integral uses
//! its power series and continued fraction, integrals use composite Simpson
//! rules after a log substitution, and `Φ` integrates the normal density.
#![allow(dead_code)]

use pdfade::{db_to_linear, SystemParams};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The reference system (m = m_hat = 50, k = 20, l_f = 10, 5 dB) at `T` channel uses.
pub fn fig1(t: f64) -> SystemParams {
    SystemParams::new(50, 50, 20.0, 10.0, t, db_to_linear(5.0), 0.05).unwrap()
}

/// Channel uses for the reference system (overall rate 0.25).
pub const FIG1_T: f64 = 4000.0;

/// `E1(x)` by its convergent series for `x <= 1` and a Lentz continued fraction above.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Composite Simpson over `[a, b]` with `intervals` (made even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Upper end of the substituted variable `s = ln t`; `e^{-e^s}` is below 1e-300 beyond it.
const S_MAX: f64 = 6.6;

/// `∫_{1/P}^∞ ln t · e^{-t}/t dt` via `t = e^s`.
pub fn beta_simpson(power: f64) -> f64 {
    simpson(|s| s * (-s.exp()).exp(), -power.ln(), S_MAX, 400_000)
}

/// `∫_{1/P}^∞ e^{-t}/t dt` via `t = e^s`, a second route to `E1(1/P)`.
pub fn alpha_simpson(power: f64) -> f64 {
    simpson(|s| (-s.exp()).exp(), -power.ln(), S_MAX, 400_000)
}

/// `E[ln(1+γ)^j]` for `γ ~ Exp(mean P)` by direct quadrature of the density:
/// `γ = P·e^s`, so the measure is `e^{s - e^s} ds`.
pub fn log1p_moment(power: f64, j: i32) -> f64 {
    simpson(
        |s| (power * s.exp()).ln_1p().powi(j) * (s - s.exp()).exp(),
        -60.0,
        S_MAX,
        800_000,
    )
}

/// Mean and variance of `ln(1+γ)` from [`log1p_moment`].
pub fn log1p_mean_var(power: f64) -> (f64, f64) {
    let m1 = log1p_moment(power, 1);
    let m2 = log1p_moment(power, 2);
    (m1, m2 - m1 * m1)
}

/// `Φ(x)` by integrating the standard normal density from -40.
pub fn phi_density(x: f64) -> f64 {
    let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x <= 0.0 {
        simpson(pdf, -40.0, x, 400_000)
    } else {
        1.0 - simpson(pdf, -40.0, -x, 400_000)
    }
}

/// Closed-form `Φ` arguments written out from the model, one per approximation.
pub struct ZOracle {
    pub mu: f64,
    pub var: f64,
}

impl ZOracle {
    pub fn new(power: f64) -> Self {
        let (mu, var) = log1p_mean_var(power);
        ZOracle { mu, var }
    }

    fn ratio(p: &SystemParams, rc: f64) -> f64 {
        p.k / (rc * p.l_f)
    }

    fn threshold(p: &SystemParams) -> f64 {
        2.0 * (1.0 + p.epsilon) * p.k / p.l_f
    }

    pub fn z1(&self, p: &SystemParams, rc: f64) -> f64 {
        let r = Self::ratio(p, rc);
        r.sqrt() * (2.0 * (1.0 + p.epsilon) * rc - self.mu) / self.var.sqrt()
    }

    pub fn z2(&self, p: &SystemParams, rc: f64) -> f64 {
        let f = (Self::ratio(p, rc) + 1e-9).floor();
        (Self::threshold(p) - f * self.mu) / (f * self.var).sqrt()
    }

    pub fn z4(&self, p: &SystemParams, rc: f64) -> f64 {
        let r = Self::ratio(p, rc);
        let f = (r + 1e-9).floor();
        let frac = if (r - r.round()).abs() < 1e-9 { 0.0 } else { r - f };
        (Self::threshold(p) - r * self.mu) / (self.var * (f + frac * frac)).sqrt()
    }
}

/// The Gaussian message-error argument for `n` packets.
pub fn clt_argument(n: f64, m_hat: u64, p_e: f64) -> f64 {
    ((m_hat as f64 - 1.0) - n * (1.0 - p_e)) / (n * p_e * (1.0 - p_e)).sqrt()
}

/// Brute-force optimum: the `n` (and its `R_C`) minimizing the CLT argument,
/// scanning every integer packet count. Ties keep the smaller `n`.
pub fn brute_force_optimum<Z: Fn(f64) -> f64>(p: &SystemParams, z_of_rc: Z, integer_fades_only: bool) -> (f64, u64, f64) {
    let n_max = (p.t / p.l_f + 1e-9).floor() as u64;
    let mut best: Option<(f64, u64, f64)> = None;
    for n in p.m_hat..=n_max {
        let rc = n as f64 * p.k / p.t;
        let ratio = p.k / (rc * p.l_f);
        if integer_fades_only && (ratio - ratio.round()).abs() > 1e-9 {
            continue;
        }
        let p_e = phi_density(z_of_rc(rc));
        let arg = clt_argument(n as f64, p.m_hat, p_e);
        if best.is_none_or(|(_, _, b)| arg < b) {
            best = Some((rc, n, arg));
        }
    }
    best.expect("grid is non-empty")
}
